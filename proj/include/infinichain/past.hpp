#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace infinichain {

using Symbol = int;

// A past read backwards from time -1. Symbols are kept oldest first so that
// appending the newest symbol is cheap. An optional fill symbol extends the
// past to the infinite constant string beyond the stored symbols.
class Past {
 public:
  Past() = default;

  static Past from_recent_first(std::span<const Symbol> recent_first,
                                std::optional<Symbol> fill = std::nullopt);
  static Past from_chronological(std::vector<Symbol> oldest_first,
                                 std::optional<Symbol> fill = std::nullopt);
  static Past constant(Symbol s) { return Past({}, s); }
  // "2111" means a_{-1}=2, a_{-2}=1, ...
  static Past parse(const std::string& recent_first, std::optional<Symbol> fill = std::nullopt);

  std::size_t length() const { return chrono_.size(); }
  bool infinite() const { return fill_.has_value(); }
  std::optional<Symbol> fill() const { return fill_; }
  bool resolves(std::size_t depth) const { return infinite() || depth <= chrono_.size(); }

  // lag >= 1; lag 1 is the most recent symbol.
  Symbol at(std::size_t lag) const {
    if (lag <= chrono_.size()) return chrono_[chrono_.size() - lag];
    return *fill_;
  }

  void push(Symbol s) { chrono_.push_back(s); }
  void pop() { chrono_.pop_back(); }

  // First k symbols (most recent first) as a finite past.
  Past head(std::size_t k) const;
  std::vector<Symbol> recent_first(std::size_t k) const;
  const std::vector<Symbol>& chronological() const { return chrono_; }

  // Base-N index of the k most recent symbols, a_{-1} least significant.
  std::uint64_t context_index(std::size_t k, int alphabet) const {
    std::uint64_t idx = 0;
    std::uint64_t w = 1;
    for (std::size_t lag = 1; lag <= k; ++lag) {
      idx += static_cast<std::uint64_t>(at(lag) - 1) * w;
      w *= static_cast<std::uint64_t>(alphabet);
    }
    return idx;
  }

  std::string to_string() const;

 private:
  Past(std::vector<Symbol> chrono, std::optional<Symbol> fill)
      : chrono_(std::move(chrono)), fill_(fill) {}

  std::vector<Symbol> chrono_;
  std::optional<Symbol> fill_;
};

// Inverse of Past::context_index for a length-k context.
Past context_from_index(std::uint64_t idx, std::size_t k, int alphabet);
std::uint64_t ipow(std::uint64_t base, std::size_t e);

}  // namespace infinichain
