#ifndef MASKCUE_LABEL_H_
#define MASKCUE_LABEL_H_

#include <string>
#include <string_view>

namespace maskcue {

enum class Label { kNoMask = 0, kMask = 1 };

/// "no_mask" / "mask"
std::string_view label_name(Label label);
/// Throws ValidationError for anything but "mask" or "no_mask".
Label parse_label(std::string_view text);

/// Higher scores are more mask-like; exact ties resolve to no_mask.
inline Label decide(double score) { return score > 0.0 ? Label::kMask : Label::kNoMask; }

}  // namespace maskcue

#endif  // MASKCUE_LABEL_H_
