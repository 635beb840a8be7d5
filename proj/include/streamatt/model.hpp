#pragma once

#include <cstddef>
#include <string>

#include "streamatt/attention.hpp"
#include "streamatt/error.hpp"
#include "streamatt/features.hpp"
#include "streamatt/tokens.hpp"

namespace streamatt {

inline constexpr int kDefaultMaxNewTokens = 128;

struct DecodeRequest {
  FeatureSequence features;
  TokenList forced_prefix;
  int max_new_tokens = kDefaultMaxNewTokens;
};

struct DecodeResult {
  TokenList tokens;  // forced prefix followed by the greedy continuation
  AttentionMatrix attention;
  double compute_cost_ms = 0.0;

  std::size_t prefix_size = 0;
  TokenList continuation() const {
    return TokenList(tokens.begin() + static_cast<std::ptrdiff_t>(prefix_size), tokens.end());
  }
};

// Incremental translation model: greedy continuation of a forced prefix over
// an audio window, returning cross-attention for every token of the output.
// A handle is owned by one stream session at a time.
class Model {
 public:
  virtual ~Model() = default;
  virtual DecodeResult decode(const DecodeRequest& request) = 0;
};

inline void check_decode_request(const DecodeRequest& req) {
  if (req.features.empty()) throw InputError("decode request has no audio frames");
  if (req.max_new_tokens <= 0) throw InputError("max_new_tokens must be positive");
  for (const auto& t : req.forced_prefix)
    if (t.is_eos) throw InputError("forced prefix must not contain EOS");
}

// Contract every model must satisfy. Throws ErrorT describing the first breach.
template <typename ErrorT = InternalError>
void check_decode_result(const DecodeRequest& req, const DecodeResult& res) {
  const auto& prefix = req.forced_prefix;
  if (res.tokens.size() < prefix.size()) throw ErrorT("result shorter than forced prefix");
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (res.tokens[i].token_id != prefix[i].token_id)
      throw ErrorT("result does not start with the forced prefix");
  const std::size_t cont = res.tokens.size() - prefix.size();
  if (cont > static_cast<std::size_t>(req.max_new_tokens))
    throw ErrorT("continuation longer than max_new_tokens");
  for (std::size_t i = prefix.size(); i + 1 < res.tokens.size(); ++i)
    if (res.tokens[i].is_eos) throw ErrorT("tokens continue past EOS");
  if (res.attention.rows() != res.tokens.size())
    throw ErrorT("attention rows do not cover every token");
  if (!res.tokens.empty() && res.attention.cols() != req.features.size())
    throw ErrorT("attention columns do not match frame count");
  if (!res.attention.rows_normalized()) throw ErrorT("attention rows are not normalized");
  if (res.compute_cost_ms < 0.0) throw ErrorT("negative compute cost");
}

}  // namespace streamatt
