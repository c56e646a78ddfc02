#include "dcar/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "dcar/error.hpp"

namespace dcar {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Manifest::Manifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string> ids;
  std::set<std::string> labels;
  for (const auto& e : entries_) {
    if (e.track_id.empty()) throw DataError("manifest: empty track_id");
    if (e.label.empty()) throw DataError("manifest: track " + e.track_id + " has no label");
    if (!ids.insert(e.track_id).second) {
      throw DataError("manifest: duplicate track_id " + e.track_id);
    }
    labels.insert(e.label);
  }
  events_.assign(labels.begin(), labels.end());
}

std::vector<ManifestEntry> Manifest::split(Split s) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
               [s](const ManifestEntry& e) { return e.split == s; });
  return out;
}

int Manifest::event_index(const std::string& label) const {
  auto it = std::lower_bound(events_.begin(), events_.end(), label);
  if (it == events_.end() || *it != label) {
    throw DataError("label '" + label + "' is not in the event catalog");
  }
  return static_cast<int>(it - events_.begin());
}

std::string split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

Manifest read_manifest(std::istream& in, const std::filesystem::path& base_dir,
                       const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw DataError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  bool header = false;
  std::vector<ManifestEntry> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (!header) {
      if (fields != std::vector<std::string>{"track_id", "path", "label", "split"}) {
        fail("expected header 'track_id,path,label,split'");
      }
      header = true;
      continue;
    }
    if (fields.size() != 4) fail("expected 4 fields");
    ManifestEntry e;
    e.track_id = fields[0];
    e.path = fields[1];
    if (e.path.is_relative()) e.path = base_dir / e.path;
    e.label = fields[2];
    if (fields[3] == "train") {
      e.split = Split::kTrain;
    } else if (fields[3] == "test") {
      e.split = Split::kTest;
    } else {
      fail("split must be 'train' or 'test', got '" + fields[3] + "'");
    }
    if (e.track_id.empty() || e.label.empty()) fail("empty track_id or label");
    entries.push_back(std::move(e));
  }
  if (!header) throw DataError(source + ": empty manifest");
  return Manifest(std::move(entries));
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  return read_manifest(in, path.parent_path(), path.string());
}

void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries) {
  out << "track_id,path,label,split\n";
  for (const auto& e : entries) {
    out << e.track_id << ',' << e.path.generic_string() << ',' << e.label << ','
        << split_name(e.split) << '\n';
  }
}

}  // namespace dcar
