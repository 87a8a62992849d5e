#ifndef INOC_VERSION_HPP
#define INOC_VERSION_HPP

namespace inoc {

inline constexpr const char* kToolName = "inoc";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace inoc

#endif
