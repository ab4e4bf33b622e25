#ifndef LEXALIGN_VERSION_HPP
#define LEXALIGN_VERSION_HPP

namespace lexalign {

inline constexpr const char* kVersion = "0.1.0";

}

#endif
