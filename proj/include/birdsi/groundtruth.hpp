#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "birdsi/rational.hpp"

namespace birdsi::groundtruth {

// A collection image, addressed by the SHA-256 of its bytes. The hash
// decouples query identifiers from category-revealing file paths.
struct ImageRef {
  std::string link_id;      // 64 lowercase hex chars
  std::string source_path;  // relative to the collection root, '/'-separated
};

struct Category {
  std::string name;                // relative directory path
  std::vector<ImageRef> members;   // sorted by link_id, unique
};

// One benchmark query: the image plus the union of all categories that
// contain it (including the image itself unless compiled with exclude_self).
struct Query {
  ImageRef image;
  std::vector<std::string> ground_truth;  // sorted link_ids
};

struct GroundTruthFile {
  std::int64_t version = 1;
  Count g_max = 0;
  std::vector<Category> categories;  // sorted by name
  std::vector<Query> queries;        // derived from categories, sorted by link_id
};

// SHA-256 of the content, rendered as 64 lowercase hex chars.
std::string hash_image(std::span<const std::byte> content);
std::string hash_image(std::string_view content);
std::string hash_file(const std::filesystem::path& path);

struct ScanResult {
  std::vector<Category> categories;
  std::vector<std::string> warnings;  // e.g. empty image files
};

// Walks the collection tree: every directory that directly contains at least
// one image file (by extension) becomes a category named by its relative
// path. Hidden files and directories are skipped. Identical bytes under two
// paths yield one link_id in several categories; equal hashes over different
// bytes are rejected as a collision.
ScanResult scan_collection(const std::filesystem::path& root);

// Builds the versioned ground truth from scanned categories. With a previous
// version, enforces append-only succession (version bumps by one, no
// (category, member) pair may disappear) and throws VersioningError
// otherwise.
GroundTruthFile compile_ground_truth(std::vector<Category> categories,
                                     const GroundTruthFile* previous = nullptr);

// Canonical line-oriented text form; load(serialize(gt)) == gt and
// serialize(load(text)) == text byte for byte.
std::string serialize(const GroundTruthFile& gt);
GroundTruthFile parse_ground_truth(std::string_view text);
GroundTruthFile load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const GroundTruthFile& gt,
                       const std::filesystem::path& path);

enum class QueryDirMode {
  Symlink,      // relative symlink into the collection; falls back to pointer
  PointerFile,  // one-line file holding the relative source path
  Opaque,       // pointer file that withholds the source path
};

// Writes one entry per distinct image into `out`, named by link_id.
// Idempotent over identical reruns; conflicting pre-existing entries throw.
// Returns the number of distinct images. `collection_root` is required for
// Symlink mode.
Count emit_query_directory(const GroundTruthFile& gt,
                           const std::filesystem::path& out,
                           QueryDirMode mode = QueryDirMode::Symlink,
                           const std::filesystem::path& collection_root = {});

struct SuccessionReport {
  bool pass = false;
  std::vector<std::string> violations;
};

// PASS iff new_gt.version == old_gt.version + 1 and every (category, member)
// pair of old_gt survives in new_gt. Violations are reported, not thrown.
SuccessionReport validate_succession(const GroundTruthFile& old_gt,
                                     const GroundTruthFile& new_gt);

}  // namespace birdsi::groundtruth
