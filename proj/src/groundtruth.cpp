#include "birdsi/groundtruth.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "birdsi/errors.hpp"

namespace birdsi::groundtruth {

namespace fs = std::filesystem;

namespace {

std::string to_hex(const unsigned char* data, std::size_t len) {
  static const char digits[] = "0123456789abcdef";
  std::string out(len * 2, '0');
  for (std::size_t i = 0; i < len; ++i) {
    out[2 * i] = digits[data[i] >> 4];
    out[2 * i + 1] = digits[data[i] & 0xf];
  }
  return out;
}

bool is_link_id(std::string_view s) {
  if (s.size() != 64) return false;
  for (char c : s)
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  return true;
}

// Strict non-negative decimal parse: digits only, no sign, no leading junk.
std::optional<std::int64_t> parse_count_strict(std::string_view s) {
  if (s.empty() || s.size() > 18) return std::nullopt;
  std::int64_t value = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return value;
}

}  // namespace

std::string hash_image(std::span<const std::byte> content) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(content.data(), content.size(), md, &len, EVP_sha256(),
                 nullptr) != 1)
    throw IoError("SHA-256 digest failed");
  return to_hex(md, len);
}

std::string hash_image(std::string_view content) {
  return hash_image(std::as_bytes(std::span(content.data(), content.size())));
}

std::string hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw IoError("SHA-256 context allocation failed");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 65536> buffer;
  while (in) {
    in.read(buffer.data(), buffer.size());
    std::streamsize got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx, buffer.data(), static_cast<std::size_t>(got));
  }
  if (in.bad()) {
    EVP_MD_CTX_free(ctx);
    throw IoError("read error while hashing '" + path.string() + "'");
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  return to_hex(md, len);
}

namespace {

const std::set<std::string>& image_extensions() {
  static const std::set<std::string> exts{".jpg", ".jpeg", ".png", ".gif",
                                          ".bmp", ".tif",  ".tiff"};
  return exts;
}

bool is_image_file(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return image_extensions().count(ext) > 0;
}

bool has_hidden_component(const fs::path& relative) {
  for (const auto& part : relative) {
    std::string s = part.string();
    if (!s.empty() && s[0] == '.' && s != "." && s != "..") return true;
  }
  return false;
}

bool files_identical(const fs::path& a, const fs::path& b) {
  std::error_code ec;
  if (fs::file_size(a, ec) != fs::file_size(b, ec)) return false;
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) throw IoError("cannot reopen files for collision check");
  return std::equal(std::istreambuf_iterator<char>(fa),
                    std::istreambuf_iterator<char>(),
                    std::istreambuf_iterator<char>(fb),
                    std::istreambuf_iterator<char>());
}

}  // namespace

ScanResult scan_collection(const fs::path& root) {
  std::error_code ec;
  if (!fs::exists(root, ec) || !fs::is_directory(root, ec))
    throw IoError("collection root '" + root.string() +
                  "' is not a readable directory");

  ScanResult result;
  std::map<std::string, std::vector<ImageRef>> by_category;
  std::map<std::string, std::string> first_path_for_hash;  // collision check

  fs::recursive_directory_iterator it(root, ec), end;
  if (ec) throw IoError("cannot read '" + root.string() + "': " + ec.message());
  for (; it != end; it.increment(ec)) {
    if (ec) throw IoError("error walking '" + root.string() + "': " + ec.message());
    const fs::directory_entry& entry = *it;
    fs::path relative = fs::relative(entry.path(), root);
    if (has_hidden_component(relative)) {
      if (entry.is_directory()) it.disable_recursion_pending();
      continue;
    }
    if (!entry.is_regular_file()) continue;
    if (!is_image_file(entry.path())) continue;
    fs::path parent = relative.parent_path();
    if (parent.empty()) continue;  // images at the root have no category

    std::string link_id = hash_file(entry.path());
    std::string rel_str = relative.generic_string();
    auto [pos, inserted] = first_path_for_hash.emplace(link_id, rel_str);
    if (!inserted && !files_identical(root / pos->second, entry.path()))
      throw InputError("hash collision between '" + pos->second + "' and '" +
                       rel_str + "'");
    if (fs::file_size(entry.path()) == 0)
      result.warnings.push_back("empty image file: " + rel_str);
    by_category[parent.generic_string()].push_back(
        ImageRef{std::move(link_id), std::move(rel_str)});
  }

  for (auto& [name, members] : by_category) {
    std::sort(members.begin(), members.end(),
              [](const ImageRef& a, const ImageRef& b) {
                return std::tie(a.link_id, a.source_path) <
                       std::tie(b.link_id, b.source_path);
              });
    // identical bytes stored twice in one directory collapse to one member
    members.erase(std::unique(members.begin(), members.end(),
                              [](const ImageRef& a, const ImageRef& b) {
                                return a.link_id == b.link_id;
                              }),
                  members.end());
    result.categories.push_back(Category{name, std::move(members)});
  }
  if (result.categories.empty())
    throw InputError("no image categories under '" + root.string() + "'");
  return result;
}

namespace {

std::vector<Query> derive_queries(const std::vector<Category>& categories) {
  std::map<std::string, std::set<std::string>> unions;
  std::map<std::string, std::string> best_path;
  for (const Category& category : categories) {
    std::vector<std::string> ids;
    ids.reserve(category.members.size());
    for (const ImageRef& member : category.members) ids.push_back(member.link_id);
    for (const ImageRef& member : category.members) {
      unions[member.link_id].insert(ids.begin(), ids.end());
      auto [pos, inserted] = best_path.emplace(member.link_id, member.source_path);
      if (!inserted && member.source_path < pos->second)
        pos->second = member.source_path;
    }
  }
  std::vector<Query> queries;
  queries.reserve(unions.size());
  for (auto& [link_id, members] : unions) {
    Query query;
    query.image = ImageRef{link_id, best_path[link_id]};
    query.ground_truth.assign(members.begin(), members.end());
    queries.push_back(std::move(query));
  }
  return queries;
}

Count max_gt_size(const std::vector<Query>& queries) {
  Count g_max = 0;
  for (const Query& query : queries)
    g_max = std::max<Count>(g_max, query.ground_truth.size());
  return g_max;
}

// (category, member) pairs of `old_gt` that are absent from `new_gt`.
std::vector<std::pair<std::string, std::string>> collect_removals(
    const GroundTruthFile& old_gt, const GroundTruthFile& new_gt) {
  std::map<std::string, std::set<std::string>> new_pairs;
  for (const Category& category : new_gt.categories)
    for (const ImageRef& member : category.members)
      new_pairs[category.name].insert(member.link_id);
  std::vector<std::pair<std::string, std::string>> removals;
  for (const Category& category : old_gt.categories) {
    auto pos = new_pairs.find(category.name);
    for (const ImageRef& member : category.members)
      if (pos == new_pairs.end() || !pos->second.count(member.link_id))
        removals.emplace_back(category.name, member.link_id);
  }
  return removals;
}

}  // namespace

GroundTruthFile compile_ground_truth(std::vector<Category> categories,
                                     const GroundTruthFile* previous) {
  if (categories.empty())
    throw InputError("cannot compile ground truth from zero categories");
  for (Category& category : categories) {
    if (category.members.empty())
      throw InputError("category '" + category.name + "' has no members");
    std::sort(category.members.begin(), category.members.end(),
              [](const ImageRef& a, const ImageRef& b) {
                return std::tie(a.link_id, a.source_path) <
                       std::tie(b.link_id, b.source_path);
              });
    category.members.erase(
        std::unique(category.members.begin(), category.members.end(),
                    [](const ImageRef& a, const ImageRef& b) {
                      return a.link_id == b.link_id;
                    }),
        category.members.end());
  }
  std::sort(categories.begin(), categories.end(),
            [](const Category& a, const Category& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < categories.size(); ++i)
    if (categories[i].name == categories[i - 1].name)
      throw InputError("duplicate category name '" + categories[i].name + "'");

  GroundTruthFile gt;
  gt.categories = std::move(categories);
  gt.queries = derive_queries(gt.categories);
  gt.g_max = max_gt_size(gt.queries);
  gt.version = previous ? previous->version + 1 : 1;

  if (previous) {
    auto removals = collect_removals(*previous, gt);
    if (!removals.empty()) {
      std::ostringstream msg;
      msg << "append-only violation: " << removals.size()
          << " (category, image) pair(s) removed or re-categorized:";
      for (const auto& [category, link_id] : removals)
        msg << "\n  category '" << category << "' member " << link_id;
      throw VersioningError(msg.str());
    }
  }
  return gt;
}

std::string serialize(const GroundTruthFile& gt) {
  std::ostringstream out;
  out << "BIRDSI-GT 1\n";
  out << "version " << gt.version << "\n";
  out << "gmax " << gt.g_max << "\n";
  for (const Category& category : gt.categories) {
    out << "category " << category.name << "\n";
    for (const ImageRef& member : category.members)
      out << "member " << member.link_id << " " << member.source_path << "\n";
  }
  out << "end " << gt.categories.size() << " " << gt.queries.size() << "\n";
  return out.str();
}

GroundTruthFile parse_ground_truth(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos)
      throw ParseError(lines.size() + 1, "missing final newline");
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }

  std::size_t idx = 0;
  auto need_line = [&](const char* what) -> std::string_view {
    if (idx >= lines.size())
      throw ParseError(lines.size() + 1, std::string("unexpected end of file, expected ") + what);
    return lines[idx++];
  };

  std::string_view header = need_line("header");
  if (header.rfind("BIRDSI-GT ", 0) != 0)
    throw ParseError(1, "not a ground-truth file (bad magic)");
  if (header != "BIRDSI-GT 1")
    throw ParseError(1, "unsupported format version '" +
                            std::string(header.substr(10)) + "'");

  GroundTruthFile gt;
  {
    std::string_view line = need_line("version");
    if (line.rfind("version ", 0) != 0)
      throw ParseError(idx, "expected 'version <n>'");
    auto value = parse_count_strict(line.substr(8));
    if (!value || *value < 1) throw ParseError(idx, "version must be a positive integer");
    gt.version = *value;
  }
  std::size_t gmax_line = 0;
  {
    std::string_view line = need_line("gmax");
    if (line.rfind("gmax ", 0) != 0) throw ParseError(idx, "expected 'gmax <n>'");
    auto value = parse_count_strict(line.substr(5));
    if (!value) throw ParseError(idx, "gmax must be a non-negative integer");
    gt.g_max = *value;
    gmax_line = idx;
  }

  bool saw_end = false;
  std::size_t declared_categories = 0, declared_images = 0;
  while (idx < lines.size()) {
    std::string_view line = lines[idx++];
    if (line.rfind("category ", 0) == 0) {
      std::string name(line.substr(9));
      if (name.empty()) throw ParseError(idx, "empty category name");
      if (!gt.categories.empty()) {
        if (gt.categories.back().members.empty())
          throw ParseError(idx, "category '" + gt.categories.back().name +
                                    "' has no members");
        if (name <= gt.categories.back().name)
          throw ParseError(idx, "category '" + name +
                                    "' out of canonical (lexicographic) order");
      }
      gt.categories.push_back(Category{std::move(name), {}});
      continue;
    }
    if (line.rfind("member ", 0) == 0) {
      if (gt.categories.empty())
        throw ParseError(idx, "member line before any category");
      std::string_view rest = line.substr(7);
      std::size_t space = rest.find(' ');
      if (space == std::string_view::npos)
        throw ParseError(idx, "expected 'member <link-id> <path>'");
      std::string_view link_id = rest.substr(0, space);
      std::string_view path = rest.substr(space + 1);
      if (!is_link_id(link_id))
        throw ParseError(idx, "malformed link identifier '" + std::string(link_id) + "'");
      if (path.empty()) throw ParseError(idx, "empty member path");
      Category& category = gt.categories.back();
      if (!category.members.empty()) {
        const std::string& prev = category.members.back().link_id;
        if (link_id == prev)
          throw ParseError(idx, "duplicate member " + std::string(link_id) +
                                    " in category '" + category.name + "'");
        if (link_id < prev)
          throw ParseError(idx, "member " + std::string(link_id) +
                                    " out of canonical order");
      }
      category.members.push_back(ImageRef{std::string(link_id), std::string(path)});
      continue;
    }
    if (line.rfind("end ", 0) == 0) {
      if (!gt.categories.empty() && gt.categories.back().members.empty())
        throw ParseError(idx, "category '" + gt.categories.back().name +
                                  "' has no members");
      std::string_view rest = line.substr(4);
      std::size_t space = rest.find(' ');
      if (space == std::string_view::npos)
        throw ParseError(idx, "expected 'end <categories> <images>'");
      auto ncat = parse_count_strict(rest.substr(0, space));
      auto nimg = parse_count_strict(rest.substr(space + 1));
      if (!ncat || !nimg) throw ParseError(idx, "malformed end counts");
      declared_categories = static_cast<std::size_t>(*ncat);
      declared_images = static_cast<std::size_t>(*nimg);
      saw_end = true;
      if (idx != lines.size())
        throw ParseError(idx + 1, "content after end line");
      break;
    }
    throw ParseError(idx, "unrecognized line '" + std::string(line.substr(0, 40)) + "'");
  }
  if (!saw_end) throw ParseError(lines.size() + 1, "missing end line");
  if (gt.categories.empty()) throw ParseError(gmax_line + 1, "no categories");

  gt.queries = derive_queries(gt.categories);
  if (declared_categories != gt.categories.size())
    throw ParseError(lines.size(), "end line declares " +
                                       std::to_string(declared_categories) +
                                       " categories, file has " +
                                       std::to_string(gt.categories.size()));
  if (declared_images != gt.queries.size())
    throw ParseError(lines.size(), "end line declares " +
                                       std::to_string(declared_images) +
                                       " images, file has " +
                                       std::to_string(gt.queries.size()));
  Count recomputed = max_gt_size(gt.queries);
  if (recomputed != gt.g_max)
    throw ParseError(gmax_line, "gmax header says " + std::to_string(gt.g_max) +
                                    " but recomputed maximum is " +
                                    std::to_string(recomputed));
  return gt;
}

GroundTruthFile load_ground_truth(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open ground-truth file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_ground_truth(buffer.str());
}

void save_ground_truth(const GroundTruthFile& gt, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write ground-truth file '" + path.string() + "'");
  out << serialize(gt);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Writes the entry content unless an identical one already exists.
void write_entry(const fs::path& entry, const std::string& content) {
  if (fs::exists(fs::symlink_status(entry))) {
    if (fs::is_regular_file(entry) && read_file(entry) == content) return;
    throw IoError("conflicting query-directory entry '" + entry.string() + "'");
  }
  std::ofstream out(entry, std::ios::binary);
  if (!out) throw IoError("cannot write '" + entry.string() + "'");
  out << content;
}

}  // namespace

Count emit_query_directory(const GroundTruthFile& gt, const fs::path& out,
                           QueryDirMode mode, const fs::path& collection_root) {
  if (mode == QueryDirMode::Symlink && collection_root.empty())
    throw InputError("symlink mode requires the collection root");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create query directory '" + out.string() + "'");

  Count written = 0;
  for (const Query& query : gt.queries) {
    fs::path entry = out / query.image.link_id;
    switch (mode) {
      case QueryDirMode::PointerFile:
        write_entry(entry, query.image.source_path + "\n");
        break;
      case QueryDirMode::Opaque:
        // cheat resistance: reveal nothing beyond the link identifier
        write_entry(entry, query.image.link_id + "\n");
        break;
      case QueryDirMode::Symlink: {
        fs::path target = fs::relative(
            fs::absolute(collection_root) / query.image.source_path,
            fs::absolute(out), ec);
        if (ec) throw IoError("cannot resolve symlink target for '" +
                              query.image.source_path + "'");
        if (fs::is_symlink(entry)) {
          if (fs::read_symlink(entry) == target) break;
          throw IoError("conflicting query-directory entry '" + entry.string() + "'");
        }
        if (fs::exists(fs::symlink_status(entry)))
          throw IoError("conflicting query-directory entry '" + entry.string() + "'");
        fs::create_symlink(target, entry, ec);
        if (ec)  // filesystem without symlink support
          write_entry(entry, query.image.source_path + "\n");
        break;
      }
    }
    ++written;
  }
  return written;
}

SuccessionReport validate_succession(const GroundTruthFile& old_gt,
                                     const GroundTruthFile& new_gt) {
  SuccessionReport report;
  if (new_gt.version != old_gt.version + 1)
    report.violations.push_back(
        "version: expected " + std::to_string(old_gt.version + 1) + ", got " +
        std::to_string(new_gt.version));
  for (const auto& [category, link_id] : collect_removals(old_gt, new_gt))
    report.violations.push_back("removed: category '" + category + "' member " +
                                link_id);
  report.pass = report.violations.empty();
  return report;
}

}  // namespace birdsi::groundtruth
