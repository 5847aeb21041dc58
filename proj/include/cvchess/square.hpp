#pragma once

#include <string>

#include "cvchess/errors.hpp"

namespace cvchess {

/// Board square in FEN reading order: 0 = a8, 7 = h8, 56 = a1, 63 = h1.
struct SquareIndex {
  int value = 0;

  constexpr SquareIndex() = default;
  constexpr explicit SquareIndex(int v) : value(v) {}

  static SquareIndex from_file_rank(int file, int rank) {
    if (file < 0 || file > 7 || rank < 1 || rank > 8) throw ContractViolation("file/rank out of range");
    return SquareIndex((8 - rank) * 8 + file);
  }

  constexpr int file() const { return value % 8; }      // 0 = 'a'
  constexpr int rank() const { return 8 - value / 8; }  // 1..8
  constexpr int row() const { return value / 8; }       // 0 = rank 8

  constexpr bool operator==(const SquareIndex&) const = default;
  constexpr auto operator<=>(const SquareIndex&) const = default;
};

inline std::string square_name(SquareIndex idx) {
  if (idx.value < 0 || idx.value > 63) throw ContractViolation("square index out of range: " + std::to_string(idx.value));
  return {static_cast<char>('a' + idx.file()), static_cast<char>('0' + idx.rank())};
}

inline SquareIndex parse_square(const std::string& name) {
  if (name.size() != 2 || name[0] < 'a' || name[0] > 'h' || name[1] < '1' || name[1] > '8')
    throw ParseError("invalid square name '" + name + "'");
  return SquareIndex::from_file_rank(name[0] - 'a', name[1] - '0');
}

}  // namespace cvchess
