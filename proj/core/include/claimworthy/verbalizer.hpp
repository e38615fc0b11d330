#pragma once

#include <string_view>

#include "claimworthy/corpus.hpp"

namespace claimworthy {

// Maps a raw generation to a label: ASCII-lowercase the text, then Yes iff
// the substring "es" occurs. Total and case-invariant. The rule's known
// quirk is preserved: any word containing "es" ("does", "yes, but...")
// verbalizes to Yes.
Label map_output(std::string_view raw);

}  // namespace claimworthy
