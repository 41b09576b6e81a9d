#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mcn/layers.hpp"
#include "mcn/moments.hpp"
#include "mcn/tensor.hpp"

namespace mcn {

inline constexpr const char* kUnknownToken = "<unk>";

/// Lowercase, split on whitespace, strip punctuation except apostrophes
/// between alphanumerics. An empty result becomes a single unknown token.
std::vector<std::string> tokenize(const std::string& text);

struct Vocabulary {
  std::unordered_map<std::string, int> index;
  Tensor2 table;  // |V| x E, unknown row included
  int unknown_index = 0;

  std::size_t size() const { return table.rows(); }
  std::size_t dim() const { return table.cols(); }
  int lookup(const std::string& token) const;
  std::vector<int> lookup_all(const std::vector<std::string>& tokens) const;
};

/// Word-vector text format: one token per line followed by E reals. The
/// dimension comes from the first line and is enforced afterwards; duplicate
/// tokens keep the first row (with a warning); the unknown row is appended as
/// the mean of all loaded rows.
Vocabulary load_word_vectors(const std::string& path);
void save_word_vectors(const std::string& path, const std::vector<std::string>& tokens,
                       const Tensor2& table);

struct Query {
  std::string raw_text;
  std::vector<int> tokens;
  std::string video_id;
  std::vector<Span> annotations;
};

/// LSTM sentence encoder plus a linear projection of the last hidden state
/// into the joint space.
struct LanguageParams {
  LstmParams lstm;
  Tensor2 proj_w;  // J x H
  Tensor2 proj_b;  // 1 x J
  int max_tokens = 50;

  std::size_t joint_dim() const { return proj_w.rows(); }
};

struct LanguageCache {
  std::vector<int> tokens;  // after truncation
  std::vector<LstmCache> steps;
  Vec last_hidden;
};

struct LanguageGrads {
  LstmGrads lstm;
  Tensor2 proj_w;
  Tensor2 proj_b;
  /// Rows touched in the embedding table, only filled when requested.
  std::vector<std::pair<int, Vec>> embedding_rows;
};

LanguageGrads make_language_grads(const LanguageParams& params);

/// Runs the LSTM left to right from a zero state over the token embeddings.
/// Token ids must be valid rows of `embeddings`; sentences longer than
/// max_tokens are truncated with a warning.
Vec encode_sentence(const LanguageParams& params, const Tensor2& embeddings,
                    const std::vector<int>& tokens, LanguageCache* cache = nullptr);

void encode_sentence_backward(const LanguageParams& params, const Tensor2& embeddings,
                              const LanguageCache& cache, const Vec& upstream,
                              LanguageGrads& acc, bool want_embedding_grads = false);

}  // namespace mcn
