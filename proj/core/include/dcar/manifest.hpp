#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dcar {

enum class Split { kTrain, kTest };

struct ManifestEntry {
  std::string track_id;
  std::filesystem::path path;  // absolute, or relative to the manifest's directory
  std::string label;
  Split split = Split::kTrain;
};

/// Ordered list of labeled tracks; the event catalog is the sorted set of
/// labels, so label indices do not depend on row order.
class Manifest {
 public:
  Manifest() = default;
  explicit Manifest(std::vector<ManifestEntry> entries);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::vector<ManifestEntry> split(Split s) const;
  const std::vector<std::string>& events() const { return events_; }
  int event_index(const std::string& label) const;

 private:
  std::vector<ManifestEntry> entries_;
  std::vector<std::string> events_;
};

/// CSV with header `track_id,path,label,split`. Relative paths are resolved
/// against `base_dir`.
Manifest read_manifest(std::istream& in, const std::filesystem::path& base_dir,
                       const std::string& source = "<stream>");
Manifest load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries);

std::string split_name(Split s);

}  // namespace dcar
