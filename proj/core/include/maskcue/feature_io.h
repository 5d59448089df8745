// Binary feature container.
//
//   offset  size  field
//   0       8     magic "MCFEAT01"
//   8       4     kind (u32: 0 LFCC, 1 MFCC, 2 IFCC, 3 CQCC)
//   12      4     n_frames (u32)
//   16      4     dim (u32)
//   20      4     reserved, zero
//   24      8     hop_ms (f64)
//   32      ...   n_frames * dim f64, row-major
//
// All fields little-endian.

#ifndef MASKCUE_FEATURE_IO_H_
#define MASKCUE_FEATURE_IO_H_

#include <filesystem>
#include <string>

#include "maskcue/features.h"

namespace maskcue {

std::string encode_features(const FeatureMatrix& f);
FeatureMatrix decode_features(const std::string& bytes);

void write_features(const std::filesystem::path& path, const FeatureMatrix& f);
FeatureMatrix read_features(const std::filesystem::path& path);

/// One frame per line, values separated by single spaces, %.17g.
void write_features_text(const std::filesystem::path& path, const FeatureMatrix& f);

}  // namespace maskcue

#endif  // MASKCUE_FEATURE_IO_H_
