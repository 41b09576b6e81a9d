#include "mcn/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mcn/errors.hpp"
#include "mcn/log.hpp"

namespace mcn {

namespace {

using nlohmann::json;

std::string record_label(std::size_t index) { return "record " + std::to_string(index); }

/// Primary key first, then the built-in aliases.
const json* find_key(const json& obj, const std::string& primary,
                     std::initializer_list<const char*> aliases) {
  if (auto it = obj.find(primary); it != obj.end()) return &*it;
  for (const char* alias : aliases) {
    if (auto it = obj.find(alias); it != obj.end()) return &*it;
  }
  return nullptr;
}

std::string require_string(const json& obj, std::size_t index, const std::string& primary,
                           std::initializer_list<const char*> aliases) {
  const json* v = find_key(obj, primary, aliases);
  if (v == nullptr) throw FormatError(record_label(index) + ": missing field '" + primary + "'");
  if (!v->is_string()) {
    if (v->is_number()) {
      std::ostringstream out;
      out << *v;
      return out.str();
    }
    throw FormatError(record_label(index) + ": field '" + primary + "' is not a string");
  }
  return v->get<std::string>();
}

}  // namespace

std::vector<AnnotationRecord> load_annotations(const std::string& path,
                                               const AnnotationKeys& keys,
                                               IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotations: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("annotations " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw FormatError("annotations " + path + ": top level is not an array");

  IngestReport local;
  std::vector<AnnotationRecord> records;
  records.reserve(doc.size());

  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& obj = doc[i];
    ++local.records_read;
    if (!obj.is_object()) throw FormatError(record_label(i) + ": not an object");

    AnnotationRecord rec;
    rec.annotation_id = require_string(obj, i, keys.id, {"annotation_id", "id"});
    rec.video_id = require_string(obj, i, keys.video, {"video", "video_id"});
    rec.description = require_string(obj, i, keys.description, {"description", "desc"});

    const json* segs = find_key(obj, keys.segments, {"num_segments"});
    if (segs != nullptr) {
      if (!segs->is_number_integer() || segs->get<int>() <= 0) {
        throw FormatError(record_label(i) + ": field '" + keys.segments +
                          "' is not a positive integer");
      }
      rec.num_segments = segs->get<int>();
    } else {
      rec.num_segments = keys.default_num_segments;
    }

    const json* times = find_key(obj, keys.times, {"times"});
    if (times == nullptr || !times->is_array()) {
      throw FormatError(record_label(i) + ": missing or non-array field '" + keys.times + "'");
    }
    if (times->empty() || times->size() > 4) {
      throw FormatError(record_label(i) + ": field '" + keys.times + "' must hold 1 to 4 spans");
    }
    for (const json& t : *times) {
      if (!t.is_array() || t.size() != 2 || !t[0].is_number_integer() ||
          !t[1].is_number_integer()) {
        throw FormatError(record_label(i) + ": span in '" + keys.times +
                          "' is not an [int, int] pair");
      }
      Span span{t[0].get<int>(), t[1].get<int>()};
      if (span.start > span.end || span.start < 0 || span.start >= rec.num_segments) {
        ++local.spans_rejected;
        warn(rec.annotation_id + ": rejecting span [" + std::to_string(span.start) + "," +
             std::to_string(span.end) + "]");
        continue;
      }
      if (span.end >= rec.num_segments) {
        ++local.spans_clipped;
        warn(rec.annotation_id + ": clipping span end " + std::to_string(span.end) + " to " +
             std::to_string(rec.num_segments - 1));
        span.end = rec.num_segments - 1;
      }
      rec.times.push_back(span);
    }

    if (rec.times.empty()) {
      ++local.records_dropped;
      warn(rec.annotation_id + ": dropped, no valid span");
      continue;
    }
    if (rec.times.size() < 4) {
      const Span pad = consensus_span(rec.times);
      while (rec.times.size() < 4) rec.times.push_back(pad);
      rec.padded = true;
      ++local.records_padded;
    }
    ++local.records_kept;
    records.push_back(std::move(rec));
  }

  if (records.empty()) warn("annotations " + path + ": no records kept");
  std::sort(records.begin(), records.end(),
            [](const AnnotationRecord& a, const AnnotationRecord& b) {
              return a.annotation_id < b.annotation_id;
            });
  if (report != nullptr) *report = local;
  return records;
}

void save_annotations(const std::string& path, const std::vector<AnnotationRecord>& records) {
  json doc = json::array();
  for (const auto& rec : records) {
    json times = json::array();
    for (const Span& s : rec.times) times.push_back({s.start, s.end});
    doc.push_back({{"annotation_id", rec.annotation_id},
                   {"video", rec.video_id},
                   {"description", rec.description},
                   {"times", std::move(times)},
                   {"num_segments", rec.num_segments}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write annotations: " + path);
  out << doc.dump(2) << "\n";
}

// ---- MCNF ------------------------------------------------------------------

namespace {

constexpr char kFeatureMagic[4] = {'M', 'C', 'N', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& path, const char* what) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw FormatError(path + ": truncated at " + what);
  }
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace

VideoFeatures load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open features: " + path);

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kFeatureMagic, 4) != 0) {
    throw FormatError(path + ": bad magic");
  }
  const std::uint32_t version = read_u32(in, path, "version");
  if (version != kFeatureVersion) {
    throw FormatError(path + ": unsupported version " + std::to_string(version));
  }
  char modality_code = 0;
  if (!in.read(&modality_code, 1)) throw FormatError(path + ": truncated at modality");
  if (modality_code != 0 && modality_code != 1) {
    throw FormatError(path + ": bad modality code " + std::to_string(int(modality_code)));
  }
  const std::uint32_t t = read_u32(in, path, "frame count");
  const std::uint32_t d = read_u32(in, path, "feature dim");
  const std::uint32_t fps = read_u32(in, path, "frames per segment");
  if (t == 0 || d == 0 || fps == 0) throw FormatError(path + ": zero dimension in header");
  if (t < fps) {
    throw FormatError(path + ": " + std::to_string(t) + " frames cannot fill one segment of " +
                      std::to_string(fps));
  }

  VideoFeatures vf;
  vf.modality = modality_code == 0 ? Modality::rgb : Modality::flow;
  vf.frames = Tensor2(t, d);
  vf.frames_per_segment = static_cast<int>(fps);
  vf.num_segments = static_cast<int>(t / fps);

  std::vector<unsigned char> buffer(static_cast<std::size_t>(t) * d * 4);
  if (!in.read(reinterpret_cast<char*>(buffer.data()),
               static_cast<std::streamsize>(buffer.size()))) {
    throw FormatError(path + ": payload shorter than " + std::to_string(t) + "x" +
                      std::to_string(d) + " floats");
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(t) * d; ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(buffer[4 * i]) |
                               (static_cast<std::uint32_t>(buffer[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(buffer[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(buffer[4 * i + 3]) << 24);
    const float v = std::bit_cast<float>(bits);
    if (!std::isfinite(v)) {
      throw DataError(path + ": non-finite value at frame " + std::to_string(i / d) + " dim " +
                      std::to_string(i % d));
    }
    vf.frames.raw()[i] = static_cast<double>(v);
  }
  return vf;
}

void save_features(const std::string& path, const VideoFeatures& vf) {
  vf.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write features: " + path);
  out.write(kFeatureMagic, 4);
  write_u32(out, kFeatureVersion);
  const char modality_code = vf.modality == Modality::rgb ? 0 : 1;
  out.write(&modality_code, 1);
  write_u32(out, static_cast<std::uint32_t>(vf.frames.rows()));
  write_u32(out, static_cast<std::uint32_t>(vf.frames.cols()));
  write_u32(out, static_cast<std::uint32_t>(vf.frames_per_segment));
  for (const double v : vf.frames.raw()) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                           static_cast<char>((bits >> 16) & 0xff),
                           static_cast<char>((bits >> 24) & 0xff)};
    out.write(bytes, 4);
  }
  if (!out) throw DataError("failed writing features: " + path);
}

// ---- corpus ----------------------------------------------------------------

const char* split_name(SplitId split) {
  switch (split) {
    case SplitId::train: return "train";
    case SplitId::val: return "val";
    case SplitId::test: return "test";
  }
  return "?";
}

SplitId parse_split(const std::string& name) {
  if (name == "train") return SplitId::train;
  if (name == "val") return SplitId::val;
  if (name == "test") return SplitId::test;
  throw FormatError("unknown split '" + name + "'");
}

std::vector<const AnnotationRecord*> Corpus::split(SplitId id) const {
  std::vector<const AnnotationRecord*> out;
  for (const auto& rec : records) {
    auto it = splits.find(rec.video_id);
    if (it != splits.end() && it->second == id) out.push_back(&rec);
  }
  return out;
}

std::vector<std::string> Corpus::split_videos(SplitId id) const {
  std::vector<std::string> out;
  for (const auto& [video, split] : splits) {
    if (split == id) out.push_back(video);
  }
  return out;
}

namespace {

std::map<std::string, SplitId> load_split_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file: " + path);
  std::map<std::string, SplitId> splits;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("split file " + path + " line " + std::to_string(line_number) +
                        ": expected video_id<TAB>split");
    }
    const std::string video = line.substr(0, tab);
    std::string name = line.substr(tab + 1);
    if (!name.empty() && name.back() == '\r') name.pop_back();
    const SplitId split = parse_split(name);
    auto [it, inserted] = splits.emplace(video, split);
    if (!inserted && it->second != split) {
      throw DataError("split file " + path + ": video '" + video +
                      "' assigned to more than one split");
    }
  }
  return splits;
}

}  // namespace

std::map<std::string, FeaturePaths> load_feature_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature index: " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&base](std::string raw) {
    const std::filesystem::path p(raw);
    return p.is_absolute() || base.empty() ? raw : (base / p).string();
  };
  std::map<std::string, FeaturePaths> index;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    if (line.back() == '\r') line.pop_back();
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos) {
      throw FormatError("feature index " + path + " line " + std::to_string(line_number) +
                        ": expected video_id<TAB>rgb_path<TAB>flow_path");
    }
    const std::string video = line.substr(0, tab1);
    FeaturePaths paths{resolve(line.substr(tab1 + 1, tab2 - tab1 - 1)),
                       resolve(line.substr(tab2 + 1))};
    if (!index.emplace(video, std::move(paths)).second) {
      throw DataError("feature index " + path + ": duplicate video '" + video + "'");
    }
  }
  return index;
}

Corpus load_corpus(const std::string& annotations_path, const std::string& splits_path,
                   const std::string& feature_index_path, const AnnotationKeys& keys) {
  Corpus corpus;
  corpus.records = load_annotations(annotations_path, keys, &corpus.ingest);
  corpus.splits = load_split_file(splits_path);
  if (!feature_index_path.empty()) {
    corpus.feature_index = load_feature_index(feature_index_path);
  }

  std::vector<std::string> missing;
  for (const auto& rec : corpus.records) {
    if (corpus.splits.find(rec.video_id) == corpus.splits.end()) {
      if (missing.empty() || missing.back() != rec.video_id) missing.push_back(rec.video_id);
    }
  }
  if (!missing.empty()) {
    std::string msg = "videos missing from split file:";
    for (std::size_t i = 0; i < missing.size() && i < 5; ++i) msg += " " + missing[i];
    if (missing.size() > 5) msg += " (+" + std::to_string(missing.size() - 5) + " more)";
    throw DataError(msg);
  }
  return corpus;
}

void save_split_file(const std::string& path,
                     const std::vector<std::pair<std::string, SplitId>>& assignments) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write split file: " + path);
  for (const auto& [video, split] : assignments) {
    out << video << '\t' << split_name(split) << '\n';
  }
}

void save_feature_index(const std::string& path,
                        const std::vector<std::pair<std::string, FeaturePaths>>& entries) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write feature index: " + path);
  for (const auto& [video, paths] : entries) {
    out << video << '\t' << paths.rgb << '\t' << paths.flow << '\n';
  }
}

// ---- feature store ---------------------------------------------------------

FeatureStore::FeatureStore(std::map<std::string, FeaturePaths> index)
    : index_(std::move(index)) {}

bool FeatureStore::has(const std::string& video_id) const {
  return index_.find(video_id) != index_.end();
}

const VideoFeatures& FeatureStore::get(const std::string& video_id, Modality modality) {
  const auto key = std::make_pair(video_id, modality);
  auto hit = cache_.find(key);
  if (hit != cache_.end()) return hit->second;

  auto entry = index_.find(video_id);
  if (entry == index_.end()) throw DataError("no feature files indexed for video " + video_id);
  const std::string& path = modality == Modality::rgb ? entry->second.rgb : entry->second.flow;
  VideoFeatures vf = load_features(path);
  if (vf.modality != modality) {
    throw DataError(path + ": file holds " + modality_name(vf.modality) + " but " +
                    modality_name(modality) + " was requested for " + video_id);
  }
  vf.video_id = video_id;
  return cache_.emplace(key, std::move(vf)).first->second;
}

void FeatureStore::preload(const std::vector<std::string>& video_ids, bool rgb, bool flow) {
  std::vector<std::string> missing;
  for (const auto& video : video_ids) {
    if (!has(video)) {
      missing.push_back(video);
      continue;
    }
    try {
      if (rgb) get(video, Modality::rgb);
      if (flow) get(video, Modality::flow);
    } catch (const DataError&) {
      missing.push_back(video);
    }
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    std::string msg = "missing features for:";
    for (const auto& video : missing) msg += " " + video;
    throw DataError(msg);
  }
}

}  // namespace mcn
