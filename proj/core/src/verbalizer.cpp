#include "claimworthy/verbalizer.hpp"

#include <cctype>

namespace claimworthy {

Label map_output(std::string_view raw) {
  char previous = '\0';
  for (unsigned char byte : raw) {
    const char lowered = static_cast<char>(std::tolower(byte));
    if (previous == 'e' && lowered == 's') return Label::Yes;
    previous = lowered;
  }
  return Label::No;
}

}  // namespace claimworthy
