#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "phonerec/error.hpp"

namespace phonerec {

// Silence carries this symbol throughout the pipeline; scoring drops it.
inline constexpr const char* kSilence = "sil";

// Bidirectional phone symbol <-> class index map with a fixed order.
class LabelMap {
 public:
  LabelMap() = default;

  // Deduplicates and sorts, so the index order is a pure function of the set.
  static LabelMap from_symbols(std::vector<std::string> symbols) {
    std::sort(symbols.begin(), symbols.end());
    symbols.erase(std::unique(symbols.begin(), symbols.end()), symbols.end());
    LabelMap m;
    m.symbols_ = std::move(symbols);
    for (std::size_t i = 0; i < m.symbols_.size(); ++i) m.index_[m.symbols_[i]] = static_cast<int>(i);
    return m;
  }

  int index(const std::string& symbol) const {
    auto it = index_.find(symbol);
    if (it == index_.end()) throw DataError("unknown phone symbol '" + symbol + "'");
    return it->second;
  }

  bool contains(const std::string& symbol) const { return index_.count(symbol) != 0; }

  const std::string& symbol(int index) const { return symbols_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  int size() const { return static_cast<int>(symbols_.size()); }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, int> index_;
};

}  // namespace phonerec
