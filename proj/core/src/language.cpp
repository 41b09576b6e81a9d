#include "mcn/language.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "mcn/errors.hpp"
#include "mcn/log.hpp"

namespace mcn {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }

std::string clean_token(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(raw[i]);
    if (is_word_char(c)) {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'' && i > 0 && i + 1 < raw.size() &&
               is_word_char(static_cast<unsigned char>(raw[i - 1])) &&
               is_word_char(static_cast<unsigned char>(raw[i + 1]))) {
      out.push_back('\'');
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    std::string cleaned = clean_token(word);
    if (!cleaned.empty()) tokens.push_back(std::move(cleaned));
  }
  if (tokens.empty()) tokens.push_back(kUnknownToken);
  return tokens;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? unknown_index : it->second;
}

std::vector<int> Vocabulary::lookup_all(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(lookup(t));
  return ids;
}

Vocabulary load_word_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word vectors: " + path);

  std::vector<std::string> tokens;
  std::vector<Vec> rows;
  std::unordered_map<std::string, int> index;
  std::size_t dim = 0;
  std::size_t line_number = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    Vec row;
    double v = 0.0;
    while (ls >> v) row.push_back(v);
    if (ls.fail() && !ls.eof()) {
      throw FormatError("word vectors " + path + " line " + std::to_string(line_number) +
                        ": non-numeric value");
    }
    if (row.empty()) {
      throw FormatError("word vectors " + path + " line " + std::to_string(line_number) +
                        ": no values");
    }
    if (dim == 0) {
      dim = row.size();
    } else if (row.size() != dim) {
      throw FormatError("word vectors " + path + " line " + std::to_string(line_number) +
                        ": expected " + std::to_string(dim) + " values, got " +
                        std::to_string(row.size()));
    }
    if (index.count(token) != 0) {
      warn("duplicate word vector for '" + token + "' at line " + std::to_string(line_number) +
           "; keeping the first");
      continue;
    }
    index.emplace(token, static_cast<int>(rows.size()));
    tokens.push_back(token);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("word vectors " + path + ": no entries");

  Vocabulary vocab;
  vocab.index = std::move(index);
  // Last row is the unknown token, set to the corpus mean so out-of-vocabulary
  // words land in the middle of embedding space rather than at the origin.
  vocab.table = Tensor2(rows.size() + 1, dim);
  Vec mean(dim, 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    vocab.table.set_row(r, rows[r]);
    add_to(mean, rows[r]);
  }
  for (double& v : mean) v /= static_cast<double>(rows.size());
  vocab.table.set_row(rows.size(), mean);
  vocab.unknown_index = static_cast<int>(rows.size());
  // A literal unknown token in the file keeps its own learned row.
  auto it = vocab.index.find(kUnknownToken);
  if (it != vocab.index.end()) vocab.unknown_index = it->second;
  vocab.index.emplace(kUnknownToken, vocab.unknown_index);
  return vocab;
}

void save_word_vectors(const std::string& path, const std::vector<std::string>& tokens,
                       const Tensor2& table) {
  if (tokens.size() != table.rows()) {
    throw DimensionError("save_word_vectors: " + std::to_string(tokens.size()) +
                         " tokens vs table " + table.shape_str());
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write word vectors: " + path);
  out.precision(17);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << tokens[r];
    for (std::size_t c = 0; c < table.cols(); ++c) out << ' ' << table.at(r, c);
    out << '\n';
  }
}

LanguageGrads make_language_grads(const LanguageParams& params) {
  LanguageGrads g;
  g.lstm = make_lstm_grads(params.lstm);
  g.proj_w = Tensor2(params.proj_w.rows(), params.proj_w.cols());
  g.proj_b = Tensor2(1, params.proj_b.cols());
  return g;
}

Vec encode_sentence(const LanguageParams& params, const Tensor2& embeddings,
                    const std::vector<int>& tokens, LanguageCache* cache) {
  if (tokens.empty()) throw DataError("encode_sentence: empty token list");
  std::vector<int> used = tokens;
  if (params.max_tokens > 0 && used.size() > static_cast<std::size_t>(params.max_tokens)) {
    warn("sentence of " + std::to_string(used.size()) + " tokens truncated to " +
         std::to_string(params.max_tokens));
    used.resize(static_cast<std::size_t>(params.max_tokens));
  }

  const std::size_t h = params.lstm.hidden_size();
  LstmState state{Vec(h, 0.0), Vec(h, 0.0)};
  if (cache != nullptr) {
    cache->tokens = used;
    cache->steps.resize(used.size());
  }
  for (std::size_t t = 0; t < used.size(); ++t) {
    const int id = used[t];
    if (id < 0 || static_cast<std::size_t>(id) >= embeddings.rows()) {
      throw DataError("token id " + std::to_string(id) + " outside embedding table " +
                      embeddings.shape_str());
    }
    const Vec x = embeddings.row(static_cast<std::size_t>(id));
    state = lstm_step(params.lstm, x, state, cache != nullptr ? &cache->steps[t] : nullptr);
  }
  if (cache != nullptr) cache->last_hidden = state.h;
  return linear_forward(params.proj_w, params.proj_b, state.h);
}

void encode_sentence_backward(const LanguageParams& params, const Tensor2& embeddings,
                              const LanguageCache& cache, const Vec& upstream,
                              LanguageGrads& acc, bool want_embedding_grads) {
  (void)embeddings;
  const LinearGrads proj = linear_backward(params.proj_w, params.proj_b, cache.last_hidden, upstream);
  for (std::size_t i = 0; i < proj.weight.size(); ++i) acc.proj_w.raw()[i] += proj.weight.raw()[i];
  for (std::size_t i = 0; i < proj.bias.size(); ++i) acc.proj_b.raw()[i] += proj.bias.raw()[i];

  const std::size_t h = params.lstm.hidden_size();
  Vec d_h = proj.input;
  Vec d_c(h, 0.0);
  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    const LstmStepGrads step = lstm_backward(params.lstm, cache.steps[t], d_h, d_c, acc.lstm);
    if (want_embedding_grads) {
      acc.embedding_rows.emplace_back(cache.tokens[t], step.input);
    }
    d_h = step.h_prev;
    d_c = step.c_prev;
  }
}

}  // namespace mcn
