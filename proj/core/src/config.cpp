#include "mcn/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "mcn/errors.hpp"

namespace mcn {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

bool parse_bool(const std::string& value, const std::string& key, int line_number) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("line " + std::to_string(line_number) + ": bad boolean for " + key + ": '" +
                    value + "'");
}

double parse_double(const std::string& value, const std::string& key, int line_number) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line_number) + ": bad number for " + key + ": '" +
                      value + "'");
  }
}

long long parse_int(const std::string& value, const std::string& key, int line_number) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("line " + std::to_string(line_number) + ": bad integer for " + key + ": '" +
                      value + "'");
  }
  return v;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, int)> set;
};

// Declaration order here is the canonical serialization order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto str = [&t](const std::string& key, std::string RunConfig::* member) {
      t.push_back({key,
                   {[member](const RunConfig& c) { return c.*member; },
                    [member](RunConfig& c, const std::string& v, int) { c.*member = v; }}});
    };
    auto num_i = [&t](const std::string& key, int RunConfig::* member) {
      t.push_back({key,
                   {[member](const RunConfig& c) { return std::to_string(c.*member); },
                    [member, key](RunConfig& c, const std::string& v, int line) {
                      c.*member = static_cast<int>(parse_int(v, key, line));
                    }}});
    };
    auto num_u64 = [&t](const std::string& key, std::uint64_t RunConfig::* member) {
      t.push_back({key,
                   {[member](const RunConfig& c) { return std::to_string(c.*member); },
                    [member, key](RunConfig& c, const std::string& v, int line) {
                      c.*member = static_cast<std::uint64_t>(parse_int(v, key, line));
                    }}});
    };
    auto num_d = [&t](const std::string& key, double RunConfig::* member) {
      t.push_back({key,
                   {[member](const RunConfig& c) { return format_double(c.*member); },
                    [member, key](RunConfig& c, const std::string& v, int line) {
                      c.*member = parse_double(v, key, line);
                    }}});
    };
    auto flag = [&t](const std::string& key, bool RunConfig::* member) {
      t.push_back({key,
                   {[member](const RunConfig& c) { return c.*member ? "true" : "false"; },
                    [member, key](RunConfig& c, const std::string& v, int line) {
                      c.*member = parse_bool(v, key, line);
                    }}});
    };

    str("annotations", &RunConfig::annotations);
    str("feature_index", &RunConfig::feature_index);
    str("splits", &RunConfig::splits);
    str("word_vectors", &RunConfig::word_vectors);
    str("checkpoint", &RunConfig::checkpoint);
    str("out_dir", &RunConfig::out_dir);
    num_i("joint_dim", &RunConfig::joint_dim);
    num_i("hidden_dim", &RunConfig::hidden_dim);
    num_i("lstm_hidden", &RunConfig::lstm_hidden);
    num_d("late_fusion", &RunConfig::late_fusion);
    num_d("margin", &RunConfig::margin);
    num_d("lambda", &RunConfig::intra_weight);
    num_d("learning_rate", &RunConfig::learning_rate);
    num_i("batch_size", &RunConfig::batch_size);
    num_i("epochs", &RunConfig::epochs);
    num_i("inter_negatives", &RunConfig::inter_negatives);
    num_i("patience", &RunConfig::patience);
    num_u64("seed", &RunConfig::seed);
    num_i("max_tokens", &RunConfig::max_tokens);
    flag("use_global", &RunConfig::use_global);
    flag("use_tef", &RunConfig::use_tef);
    flag("use_rgb", &RunConfig::use_rgb);
    flag("use_flow", &RunConfig::use_flow);
    flag("compact_input", &RunConfig::compact_input);
    flag("language_free", &RunConfig::language_free);
    flag("finetune_embeddings", &RunConfig::finetune_embeddings);
    num_i("trials", &RunConfig::trials);
    num_i("jobs", &RunConfig::jobs);
    str("split", &RunConfig::split);
    str("baseline", &RunConfig::baseline);
    num_i("default_num_segments", &RunConfig::default_num_segments);
    str("ann_key_id", &RunConfig::ann_key_id);
    str("ann_key_video", &RunConfig::ann_key_video);
    str("ann_key_description", &RunConfig::ann_key_description);
    str("ann_key_times", &RunConfig::ann_key_times);
    str("ann_key_segments", &RunConfig::ann_key_segments);
    return t;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [name, field] : fields()) {
    if (name == key) return &field;
  }
  return nullptr;
}

}  // namespace

std::string RunConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [name, field] : fields()) {
    out << name << " = " << field.get(*this) << "\n";
  }
  return out.str();
}

void RunConfig::apply_line(const std::string& line, int line_number) {
  std::string body = line;
  const auto hash = body.find('#');
  if (hash != std::string::npos) body = body.substr(0, hash);
  body = trim(body);
  if (body.empty()) return;

  const auto eq = body.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("line " + std::to_string(line_number) + ": expected key = value, got '" +
                      trim(line) + "'");
  }
  const std::string key = trim(body.substr(0, eq));
  const std::string value = trim(body.substr(eq + 1));
  if (key.empty()) {
    throw ConfigError("line " + std::to_string(line_number) + ": empty key");
  }
  const Field* field = find_field(key);
  if (field == nullptr) {
    throw ConfigError("line " + std::to_string(line_number) + ": unknown key '" + key + "'");
  }
  field->set(*this, value, line_number);
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    config.apply_line(line, line_number);
  }
  return config;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str());
}

void RunConfig::validate() const {
  if (joint_dim <= 0) throw ConfigError("joint_dim must be positive");
  if (hidden_dim <= 0) throw ConfigError("hidden_dim must be positive");
  if (lstm_hidden <= 0) throw ConfigError("lstm_hidden must be positive");
  if (late_fusion < 0.0) throw ConfigError("late_fusion must be non-negative");
  if (margin < 0.0) throw ConfigError("margin must be non-negative");
  if (intra_weight < 0.0 || intra_weight > 1.0) throw ConfigError("lambda must be in [0, 1]");
  if (learning_rate < 0.0) throw ConfigError("learning_rate must be non-negative");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (inter_negatives < 0) throw ConfigError("inter_negatives must be non-negative");
  if (patience < 0) throw ConfigError("patience must be non-negative");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
  if (trials <= 0) throw ConfigError("trials must be positive");
  if (jobs <= 0) throw ConfigError("jobs must be positive");
  if (default_num_segments <= 0) throw ConfigError("default_num_segments must be positive");
  if (!use_rgb && !use_flow) throw ConfigError("at least one of use_rgb/use_flow required");
  if (split != "train" && split != "val" && split != "test") {
    throw ConfigError("split must be train, val or test, got '" + split + "'");
  }
}

void RunConfig::adopt_model_structure(const RunConfig& from) {
  joint_dim = from.joint_dim;
  hidden_dim = from.hidden_dim;
  lstm_hidden = from.lstm_hidden;
  late_fusion = from.late_fusion;
  max_tokens = from.max_tokens;
  use_global = from.use_global;
  use_tef = from.use_tef;
  use_rgb = from.use_rgb;
  use_flow = from.use_flow;
  compact_input = from.compact_input;
  language_free = from.language_free;
  finetune_embeddings = from.finetune_embeddings;
  if (word_vectors.empty()) word_vectors = from.word_vectors;
}

}  // namespace mcn
