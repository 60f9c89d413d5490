#include "infinichain/past.hpp"

#include <algorithm>

#include "infinichain/errors.hpp"

namespace infinichain {

Past Past::from_recent_first(std::span<const Symbol> recent_first, std::optional<Symbol> fill) {
  std::vector<Symbol> chrono(recent_first.rbegin(), recent_first.rend());
  return Past(std::move(chrono), fill);
}

Past Past::from_chronological(std::vector<Symbol> oldest_first, std::optional<Symbol> fill) {
  return Past(std::move(oldest_first), fill);
}

Past Past::parse(const std::string& recent_first, std::optional<Symbol> fill) {
  std::vector<Symbol> v;
  for (char c : recent_first) {
    if (c < '1' || c > '9') throw Error("bad symbol in past: " + recent_first);
    v.push_back(c - '0');
  }
  return from_recent_first(v, fill);
}

Past Past::head(std::size_t k) const {
  if (!resolves(k)) throw PastTooShort(static_cast<int>(k), 0);
  return from_recent_first(recent_first(k));
}

std::vector<Symbol> Past::recent_first(std::size_t k) const {
  std::vector<Symbol> out(k);
  for (std::size_t lag = 1; lag <= k; ++lag) out[lag - 1] = at(lag);
  return out;
}

std::string Past::to_string() const {
  std::string s;
  for (auto it = chrono_.rbegin(); it != chrono_.rend(); ++it) s += std::to_string(*it);
  if (fill_) s += "(" + std::to_string(*fill_) + ")";
  return s;
}

Past context_from_index(std::uint64_t idx, std::size_t k, int alphabet) {
  std::vector<Symbol> v(k);
  for (std::size_t j = 0; j < k; ++j) {
    v[j] = static_cast<Symbol>(idx % static_cast<std::uint64_t>(alphabet)) + 1;
    idx /= static_cast<std::uint64_t>(alphabet);
  }
  return Past::from_recent_first(v);
}

std::uint64_t ipow(std::uint64_t base, std::size_t e) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= base;
  return r;
}

}  // namespace infinichain
