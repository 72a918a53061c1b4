#ifndef GRIDSAMPLER_VERSION_HPP
#define GRIDSAMPLER_VERSION_HPP

namespace gridsampler {

inline constexpr const char* kToolName = "gridsampler";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace gridsampler

#endif  // GRIDSAMPLER_VERSION_HPP
