#pragma once

// FEN codec, SAN/PGN parsing and a legal-move engine used to replay games
// into per-ply ground-truth positions.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvchess/errors.hpp"
#include "cvchess/square.hpp"

namespace cvchess {

// ---------------------------------------------------------------------------
// Piece labels and board placement

/// The 13 per-square classes. The numeric value is the class index used by
/// the classifiers.
enum class PieceLabel : std::uint8_t { P, N, B, R, Q, K, p, n, b, r, q, k, Empty };

inline constexpr int kNumClasses = 13;
inline constexpr int kEmptyClass = 12;
inline constexpr std::string_view kLabelChars = "PNBRQKpnbrqk.";

inline char label_char(PieceLabel l) { return kLabelChars[static_cast<int>(l)]; }
inline int class_index(PieceLabel l) { return static_cast<int>(l); }

inline PieceLabel label_from_class(int c) {
  if (c < 0 || c >= kNumClasses) throw ContractViolation("class index out of range: " + std::to_string(c));
  return static_cast<PieceLabel>(c);
}

inline std::optional<PieceLabel> label_from_char(char c) {
  const auto pos = kLabelChars.substr(0, 12).find(c);
  if (pos == std::string_view::npos) return std::nullopt;
  return static_cast<PieceLabel>(pos);
}

inline bool is_white(PieceLabel l) { return l <= PieceLabel::K; }
inline bool is_black(PieceLabel l) { return l >= PieceLabel::p && l <= PieceLabel::k; }

/// 64 labels in FEN reading order (a8 first).
struct BoardState {
  std::array<PieceLabel, 64> squares{};

  BoardState() { squares.fill(PieceLabel::Empty); }

  PieceLabel& operator[](SquareIndex s) { return squares[s.value]; }
  PieceLabel operator[](SquareIndex s) const { return squares[s.value]; }
  PieceLabel& operator[](int i) { return squares[i]; }
  PieceLabel operator[](int i) const { return squares[i]; }

  bool operator==(const BoardState&) const = default;
};

/// Expands the placement field; digits become runs of empty squares.
inline BoardState fen_expand(std::string_view placement) {
  BoardState board;
  int rank_idx = 0;
  int file = 0;
  for (std::size_t i = 0; i <= placement.size(); ++i) {
    const bool end = i == placement.size();
    const char c = end ? '/' : placement[i];
    if (c == '/') {
      if (file != 8)
        throw ParseError("FEN rank " + std::to_string(rank_idx + 1) + " describes " + std::to_string(file) +
                         " squares, expected 8");
      ++rank_idx;
      file = 0;
      if (rank_idx > 8) throw ParseError("FEN placement has more than 8 ranks");
      continue;
    }
    if (rank_idx >= 8) throw ParseError("FEN placement has more than 8 ranks");
    if (c >= '1' && c <= '8') {
      file += c - '0';
      if (file > 8)
        throw ParseError("FEN rank " + std::to_string(rank_idx + 1) + " describes " + std::to_string(file) +
                         " squares, expected 8");
      continue;
    }
    const auto label = label_from_char(c);
    if (!label)
      throw ParseError(std::string("FEN rank ") + std::to_string(rank_idx + 1) + ": invalid character '" + c + "'");
    if (file >= 8)
      throw ParseError("FEN rank " + std::to_string(rank_idx + 1) + " describes more than 8 squares");
    board[rank_idx * 8 + file] = *label;
    ++file;
  }
  if (rank_idx != 8) throw ParseError("FEN placement has " + std::to_string(rank_idx) + " ranks, expected 8");
  return board;
}

inline std::string fen_compress(const BoardState& board) {
  std::string out;
  for (int row = 0; row < 8; ++row) {
    int run = 0;
    for (int f = 0; f < 8; ++f) {
      const PieceLabel l = board[row * 8 + f];
      if (l == PieceLabel::Empty) {
        ++run;
        continue;
      }
      if (run) out += static_cast<char>('0' + run);
      run = 0;
      out += label_char(l);
    }
    if (run) out += static_cast<char>('0' + run);
    if (row != 7) out += '/';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Positions

enum class Color : std::uint8_t { White, Black };
inline Color opposite(Color c) { return c == Color::White ? Color::Black : Color::White; }

enum class PieceKind : std::uint8_t { Pawn, Knight, Bishop, Rook, Queen, King };

inline PieceKind kind_of(PieceLabel l) { return static_cast<PieceKind>(static_cast<int>(l) % 6); }
inline PieceLabel make_label(PieceKind k, Color c) {
  return static_cast<PieceLabel>(static_cast<int>(k) + (c == Color::Black ? 6 : 0));
}
inline bool belongs_to(PieceLabel l, Color c) { return c == Color::White ? is_white(l) : is_black(l); }

namespace castling {
inline constexpr std::uint8_t kWhiteKing = 1;
inline constexpr std::uint8_t kWhiteQueen = 2;
inline constexpr std::uint8_t kBlackKing = 4;
inline constexpr std::uint8_t kBlackQueen = 8;
}  // namespace castling

struct GamePosition {
  BoardState board;
  Color side_to_move = Color::White;
  std::uint8_t castling = 0;
  std::optional<SquareIndex> en_passant;
  int halfmove_clock = 0;
  int fullmove_number = 1;

  bool operator==(const GamePosition&) const = default;
};

inline constexpr std::string_view kStartFen = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";
inline constexpr std::string_view kDefaultFenSuffix = "w - - 0 1";

inline std::string full_fen(const GamePosition& pos) {
  std::string out = fen_compress(pos.board);
  out += pos.side_to_move == Color::White ? " w " : " b ";
  std::string rights;
  if (pos.castling & castling::kWhiteKing) rights += 'K';
  if (pos.castling & castling::kWhiteQueen) rights += 'Q';
  if (pos.castling & castling::kBlackKing) rights += 'k';
  if (pos.castling & castling::kBlackQueen) rights += 'q';
  out += rights.empty() ? "-" : rights;
  out += ' ';
  out += pos.en_passant ? square_name(*pos.en_passant) : "-";
  out += ' ' + std::to_string(pos.halfmove_clock) + ' ' + std::to_string(pos.fullmove_number);
  return out;
}

namespace detail {

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline int parse_nonneg(const std::string& s, const char* field) {
  if (s.empty() || s.size() > 6 || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw ParseError(std::string("FEN ") + field + " field invalid: '" + s + "'");
  return std::stoi(s);
}

}  // namespace detail

/// Parses a six-field FEN. Shredder/X-FEN castling letters are rejected.
inline GamePosition parse_fen(std::string_view fen) {
  const auto fields = detail::split_ws(fen);
  if (fields.size() != 6) throw ParseError("FEN must have 6 fields, got " + std::to_string(fields.size()));
  GamePosition pos;
  pos.board = fen_expand(fields[0]);
  if (fields[1] == "w")
    pos.side_to_move = Color::White;
  else if (fields[1] == "b")
    pos.side_to_move = Color::Black;
  else
    throw ParseError("FEN side-to-move field invalid: '" + fields[1] + "'");
  if (fields[2] != "-") {
    for (char c : fields[2]) {
      switch (c) {
        case 'K': pos.castling |= castling::kWhiteKing; break;
        case 'Q': pos.castling |= castling::kWhiteQueen; break;
        case 'k': pos.castling |= castling::kBlackKing; break;
        case 'q': pos.castling |= castling::kBlackQueen; break;
        default:
          throw ParseError(std::string("FEN castling field: unsupported right '") + c + "' (Chess960 is not supported)");
      }
    }
  }
  if (fields[3] != "-") {
    pos.en_passant = parse_square(fields[3]);
    if (pos.en_passant->rank() != 3 && pos.en_passant->rank() != 6)
      throw ParseError("FEN en passant square must be on rank 3 or 6: '" + fields[3] + "'");
  }
  pos.halfmove_clock = detail::parse_nonneg(fields[4], "halfmove clock");
  pos.fullmove_number = detail::parse_nonneg(fields[5], "fullmove number");
  if (pos.fullmove_number < 1) throw ParseError("FEN fullmove number must be >= 1");
  return pos;
}

inline GamePosition start_position() { return parse_fen(kStartFen); }

// ---------------------------------------------------------------------------
// Moves and legality

struct Move {
  SquareIndex from;
  SquareIndex to;
  std::optional<PieceKind> promotion;
  bool castle = false;
  bool en_passant = false;

  bool operator==(const Move&) const = default;
};

namespace detail {

inline bool on_board(int f, int r) { return f >= 0 && f < 8 && r >= 1 && r <= 8; }
inline SquareIndex sq(int f, int r) { return SquareIndex((8 - r) * 8 + f); }

inline constexpr int kKnightSteps[8][2] = {{1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}};
inline constexpr int kKingSteps[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
inline constexpr int kRookDirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
inline constexpr int kBishopDirs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};

/// True when `by` attacks square (f, r).
inline bool attacked(const BoardState& b, SquareIndex target, Color by) {
  const int f = target.file(), r = target.rank();
  const int pawn_dir = by == Color::White ? 1 : -1;
  for (int df : {-1, 1}) {
    const int pf = f + df, pr = r - pawn_dir;
    if (on_board(pf, pr) && b[sq(pf, pr)] == make_label(PieceKind::Pawn, by)) return true;
  }
  for (const auto& s : kKnightSteps) {
    const int nf = f + s[0], nr = r + s[1];
    if (on_board(nf, nr) && b[sq(nf, nr)] == make_label(PieceKind::Knight, by)) return true;
  }
  for (const auto& s : kKingSteps) {
    const int nf = f + s[0], nr = r + s[1];
    if (on_board(nf, nr) && b[sq(nf, nr)] == make_label(PieceKind::King, by)) return true;
  }
  auto slide = [&](const int (&dirs)[4][2], PieceKind a, PieceKind q) {
    for (const auto& d : dirs) {
      int nf = f + d[0], nr = r + d[1];
      while (on_board(nf, nr)) {
        const PieceLabel l = b[sq(nf, nr)];
        if (l != PieceLabel::Empty) {
          if (l == make_label(a, by) || l == make_label(q, by)) return true;
          break;
        }
        nf += d[0];
        nr += d[1];
      }
    }
    return false;
  };
  return slide(kRookDirs, PieceKind::Rook, PieceKind::Queen) || slide(kBishopDirs, PieceKind::Bishop, PieceKind::Queen);
}

inline std::optional<SquareIndex> find_king(const BoardState& b, Color c) {
  const PieceLabel k = make_label(PieceKind::King, c);
  for (int i = 0; i < 64; ++i)
    if (b[i] == k) return SquareIndex(i);
  return std::nullopt;
}

inline bool in_check(const BoardState& b, Color c) {
  const auto k = find_king(b, c);
  return k && attacked(b, *k, opposite(c));
}

inline void pseudo_legal(const GamePosition& pos, std::vector<Move>& out) {
  const BoardState& b = pos.board;
  const Color us = pos.side_to_move;
  const Color them = opposite(us);
  auto empty = [&](int f, int r) { return b[sq(f, r)] == PieceLabel::Empty; };
  auto enemy = [&](int f, int r) { return belongs_to(b[sq(f, r)], them); };

  for (int i = 0; i < 64; ++i) {
    const PieceLabel l = b[i];
    if (!belongs_to(l, us)) continue;
    const SquareIndex from(i);
    const int f = from.file(), r = from.rank();
    switch (kind_of(l)) {
      case PieceKind::Pawn: {
        const int dir = us == Color::White ? 1 : -1;
        const int start_rank = us == Color::White ? 2 : 7;
        const int last_rank = us == Color::White ? 8 : 1;
        auto push = [&](SquareIndex to, bool ep = false) {
          if (to.rank() == last_rank) {
            for (PieceKind k : {PieceKind::Queen, PieceKind::Rook, PieceKind::Bishop, PieceKind::Knight})
              out.push_back({from, to, k, false, false});
          } else {
            out.push_back({from, to, std::nullopt, false, ep});
          }
        };
        if (on_board(f, r + dir) && empty(f, r + dir)) {
          push(sq(f, r + dir));
          if (r == start_rank && empty(f, r + 2 * dir)) push(sq(f, r + 2 * dir));
        }
        for (int df : {-1, 1}) {
          const int nf = f + df, nr = r + dir;
          if (!on_board(nf, nr)) continue;
          if (enemy(nf, nr))
            push(sq(nf, nr));
          else if (pos.en_passant && *pos.en_passant == sq(nf, nr))
            push(sq(nf, nr), true);
        }
        break;
      }
      case PieceKind::Knight:
      case PieceKind::King: {
        const auto& steps = kind_of(l) == PieceKind::Knight ? kKnightSteps : kKingSteps;
        for (const auto& s : steps) {
          const int nf = f + s[0], nr = r + s[1];
          if (on_board(nf, nr) && !belongs_to(b[sq(nf, nr)], us)) out.push_back({from, sq(nf, nr)});
        }
        break;
      }
      case PieceKind::Bishop:
      case PieceKind::Rook:
      case PieceKind::Queen: {
        const PieceKind k = kind_of(l);
        auto slide = [&](const int (&dirs)[4][2]) {
          for (const auto& d : dirs) {
            int nf = f + d[0], nr = r + d[1];
            while (on_board(nf, nr)) {
              if (belongs_to(b[sq(nf, nr)], us)) break;
              out.push_back({from, sq(nf, nr)});
              if (!empty(nf, nr)) break;
              nf += d[0];
              nr += d[1];
            }
          }
        };
        if (k != PieceKind::Bishop) slide(kRookDirs);
        if (k != PieceKind::Rook) slide(kBishopDirs);
        break;
      }
    }
  }

  // Castling: rights, empty path, king not in check and not crossing or
  // landing on an attacked square.
  const int home = us == Color::White ? 1 : 8;
  const std::uint8_t king_right = us == Color::White ? castling::kWhiteKing : castling::kBlackKing;
  const std::uint8_t queen_right = us == Color::White ? castling::kWhiteQueen : castling::kBlackQueen;
  const PieceLabel king = make_label(PieceKind::King, us);
  const PieceLabel rook = make_label(PieceKind::Rook, us);
  if (b[sq(4, home)] == king && (pos.castling & (king_right | queen_right)) && !attacked(b, sq(4, home), them)) {
    if ((pos.castling & king_right) && b[sq(7, home)] == rook && empty(5, home) && empty(6, home) &&
        !attacked(b, sq(5, home), them) && !attacked(b, sq(6, home), them))
      out.push_back({sq(4, home), sq(6, home), std::nullopt, true, false});
    if ((pos.castling & queen_right) && b[sq(0, home)] == rook && empty(1, home) && empty(2, home) &&
        empty(3, home) && !attacked(b, sq(3, home), them) && !attacked(b, sq(2, home), them))
      out.push_back({sq(4, home), sq(2, home), std::nullopt, true, false});
  }
}

inline std::uint8_t rights_lost_at(SquareIndex s) {
  if (s == sq(4, 1)) return castling::kWhiteKing | castling::kWhiteQueen;
  if (s == sq(7, 1)) return castling::kWhiteKing;
  if (s == sq(0, 1)) return castling::kWhiteQueen;
  if (s == sq(4, 8)) return castling::kBlackKing | castling::kBlackQueen;
  if (s == sq(7, 8)) return castling::kBlackKing;
  if (s == sq(0, 8)) return castling::kBlackQueen;
  return 0;
}

}  // namespace detail

/// Applies a move without legality checks (the caller guarantees it came
/// from legal_moves).
inline GamePosition make_move(const GamePosition& pos, const Move& m) {
  GamePosition next = pos;
  BoardState& b = next.board;
  const PieceLabel moving = b[m.from];
  const bool capture = b[m.to] != PieceLabel::Empty || m.en_passant;
  const bool pawn = kind_of(moving) == PieceKind::Pawn;

  b[m.to] = m.promotion ? make_label(*m.promotion, pos.side_to_move) : moving;
  b[m.from] = PieceLabel::Empty;
  if (m.en_passant) b[detail::sq(m.to.file(), m.from.rank())] = PieceLabel::Empty;
  if (m.castle) {
    const int home = m.from.rank();
    const bool king_side = m.to.file() == 6;
    const SquareIndex rook_from = detail::sq(king_side ? 7 : 0, home);
    const SquareIndex rook_to = detail::sq(king_side ? 5 : 3, home);
    b[rook_to] = b[rook_from];
    b[rook_from] = PieceLabel::Empty;
  }

  next.castling &= static_cast<std::uint8_t>(~(detail::rights_lost_at(m.from) | detail::rights_lost_at(m.to)));
  next.en_passant.reset();
  if (pawn && std::abs(m.to.rank() - m.from.rank()) == 2)
    next.en_passant = detail::sq(m.from.file(), (m.from.rank() + m.to.rank()) / 2);
  next.halfmove_clock = (pawn || capture) ? 0 : pos.halfmove_clock + 1;
  if (pos.side_to_move == Color::Black) ++next.fullmove_number;
  next.side_to_move = opposite(pos.side_to_move);
  return next;
}

inline std::vector<Move> legal_moves(const GamePosition& pos) {
  std::vector<Move> pseudo;
  detail::pseudo_legal(pos, pseudo);
  std::vector<Move> out;
  out.reserve(pseudo.size());
  for (const Move& m : pseudo)
    if (!detail::in_check(make_move(pos, m).board, pos.side_to_move)) out.push_back(m);
  return out;
}

// ---------------------------------------------------------------------------
// SAN

enum class CastleKind : std::uint8_t { None, KingSide, QueenSide };
enum class CheckSuffix : std::uint8_t { None, Check, Mate };

struct SanMove {
  PieceKind piece = PieceKind::Pawn;
  SquareIndex destination;
  std::optional<int> from_file;  // 0..7
  std::optional<int> from_rank;  // 1..8
  bool capture = false;
  std::optional<PieceKind> promotion;
  CastleKind castle = CastleKind::None;
  CheckSuffix suffix = CheckSuffix::None;
  std::string text;

  bool operator==(const SanMove& o) const {
    return piece == o.piece && destination == o.destination && from_file == o.from_file && from_rank == o.from_rank &&
           capture == o.capture && promotion == o.promotion && castle == o.castle && suffix == o.suffix;
  }
};

namespace detail {

inline std::optional<PieceKind> piece_from_letter(char c) {
  switch (c) {
    case 'N': return PieceKind::Knight;
    case 'B': return PieceKind::Bishop;
    case 'R': return PieceKind::Rook;
    case 'Q': return PieceKind::Queen;
    case 'K': return PieceKind::King;
    default: return std::nullopt;
  }
}

}  // namespace detail

/// Parses one SAN token. Trailing move-quality marks (!, ?) are ignored.
inline SanMove parse_san(std::string_view token, int line = 0, int column = 0) {
  SanMove m;
  m.text = std::string(token);
  std::string s(token);
  while (!s.empty() && (s.back() == '!' || s.back() == '?')) s.pop_back();
  if (!s.empty() && s.back() == '#') {
    m.suffix = CheckSuffix::Mate;
    s.pop_back();
  } else if (!s.empty() && s.back() == '+') {
    m.suffix = CheckSuffix::Check;
    s.pop_back();
  }
  auto fail = [&](const std::string& why) -> SanMove {
    throw ParseError("illegal SAN token '" + std::string(token) + "': " + why, line, column);
  };
  if (s == "--" || s == "Z0" || s == "0000") return fail("null moves are not supported");
  if (s == "O-O" || s == "0-0") {
    m.piece = PieceKind::King;
    m.castle = CastleKind::KingSide;
    return m;
  }
  if (s == "O-O-O" || s == "0-0-0") {
    m.piece = PieceKind::King;
    m.castle = CastleKind::QueenSide;
    return m;
  }
  if (s.empty()) return fail("empty");

  auto is_file = [](char c) { return c >= 'a' && c <= 'h'; };
  auto is_rank = [](char c) { return c >= '1' && c <= '8'; };

  std::size_t i = 0;
  if (auto k = detail::piece_from_letter(s[0])) {
    m.piece = *k;
    i = 1;
  }
  // Promotion suffix (pawns only): "=Q" or bare "Q".
  if (m.piece == PieceKind::Pawn && s.size() >= 2) {
    const char last = s.back();
    if (auto k = detail::piece_from_letter(last); k && *k != PieceKind::King) {
      m.promotion = k;
      s.pop_back();
      if (!s.empty() && s.back() == '=') s.pop_back();
    } else if (last == '=') {
      return fail("dangling '='");
    }
  }
  if (s.size() < i + 2) return fail("missing destination square");
  const char df = s[s.size() - 2], dr = s[s.size() - 1];
  if (!is_file(df) || !is_rank(dr)) return fail("invalid destination square");
  m.destination = SquareIndex::from_file_rank(df - 'a', dr - '0');

  std::string_view mid(s.data() + i, s.size() - 2 - i);
  if (!mid.empty() && mid.back() == 'x') {
    m.capture = true;
    mid.remove_suffix(1);
  }
  for (char c : mid) {
    if (is_file(c) && !m.from_file && !m.from_rank)
      m.from_file = c - 'a';
    else if (is_rank(c) && !m.from_rank)
      m.from_rank = c - '0';
    else
      return fail("unexpected character in disambiguation");
  }
  if (m.piece == PieceKind::Pawn) {
    if (m.from_rank) return fail("pawn moves cannot carry a rank disambiguator");
    if (m.capture != m.from_file.has_value()) return fail("pawn captures need exactly a source file");
    const int last_rank = m.destination.rank();
    if (m.promotion && last_rank != 8 && last_rank != 1) return fail("promotion away from the last rank");
  }
  return m;
}

/// Resolves a SAN move against the legal moves of `pos` and plays it.
inline GamePosition apply_san(const GamePosition& pos, const SanMove& san) {
  const auto moves = legal_moves(pos);
  std::vector<Move> matches;
  for (const Move& m : moves) {
    const PieceLabel l = pos.board[m.from];
    if (san.castle != CastleKind::None) {
      if (m.castle && (m.to.file() == 6) == (san.castle == CastleKind::KingSide)) matches.push_back(m);
      continue;
    }
    if (m.castle || kind_of(l) != san.piece || m.to != san.destination) continue;
    if (san.from_file && m.from.file() != *san.from_file) continue;
    if (san.from_rank && m.from.rank() != *san.from_rank) continue;
    if (m.promotion != san.promotion) continue;
    matches.push_back(m);
  }
  const std::string label = san.text.empty() ? "move" : "'" + san.text + "'";
  if (matches.empty()) throw IllegalMove(label + " is not legal in " + full_fen(pos));
  if (matches.size() > 1) throw AmbiguousMove(label + " is ambiguous in " + full_fen(pos));
  const Move& m = matches.front();
  const bool is_capture = m.en_passant || pos.board[m.to] != PieceLabel::Empty;
  if (san.capture && !is_capture) throw IllegalMove(label + " marks a capture on an empty square in " + full_fen(pos));
  return make_move(pos, m);
}

// ---------------------------------------------------------------------------
// PGN

struct PgnGame {
  std::vector<std::pair<std::string, std::string>> tags;
  std::vector<SanMove> moves;
  std::string result = "*";

  std::optional<std::string> tag(std::string_view key) const {
    for (const auto& [k, v] : tags)
      if (k == key) return v;
    return std::nullopt;
  }
};

namespace detail {

class PgnLexer {
 public:
  explicit PgnLexer(std::string_view text) : text_(text) {}

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }
  int line() const { return line_; }
  int column() const { return col_; }

  char get() {
    const char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (!eof()) {
      const char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        get();
      } else if (c == '%' && col_ == 1) {
        while (!eof() && peek() != '\n') get();
      } else {
        break;
      }
    }
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

inline bool is_result_token(std::string_view t) { return t == "1-0" || t == "0-1" || t == "1/2-1/2" || t == "*"; }

}  // namespace detail

/// Parses every game in a PGN export-format text. Comments, variations and
/// NAGs are skipped.
inline std::vector<PgnGame> parse_pgn(std::string_view text) {
  detail::PgnLexer lex(text);
  std::vector<PgnGame> games;
  PgnGame cur;
  bool in_game = false;
  bool movetext_started = false;

  auto finish = [&](std::string result) {
    cur.result = std::move(result);
    games.push_back(std::move(cur));
    cur = PgnGame{};
    in_game = false;
    movetext_started = false;
  };

  while (true) {
    lex.skip_space();
    if (lex.eof()) break;
    const int line = lex.line(), col = lex.column();
    const char c = lex.peek();

    if (c == '[') {
      if (movetext_started) throw ParseError("tag pair inside movetext (missing result token?)", line, col);
      lex.get();
      lex.skip_space();
      std::string key;
      while (!lex.eof() && (std::isalnum(static_cast<unsigned char>(lex.peek())) || lex.peek() == '_')) key += lex.get();
      if (key.empty()) throw ParseError("tag pair without a name", line, col);
      lex.skip_space();
      if (lex.peek() != '"') throw ParseError("tag value must be a quoted string", lex.line(), lex.column());
      lex.get();
      std::string value;
      while (true) {
        if (lex.eof() || lex.peek() == '\n') throw ParseError("unterminated tag value", line, col);
        char v = lex.get();
        if (v == '\\') {
          if (lex.eof()) throw ParseError("unterminated tag value", line, col);
          v = lex.get();
        } else if (v == '"') {
          break;
        }
        value += v;
      }
      lex.skip_space();
      if (lex.peek() != ']') throw ParseError("tag pair missing ']'", lex.line(), lex.column());
      lex.get();
      cur.tags.emplace_back(std::move(key), std::move(value));
      in_game = true;
      continue;
    }

    in_game = true;
    movetext_started = true;
    if (c == '{') {
      lex.get();
      while (!lex.eof() && lex.peek() != '}') lex.get();
      if (lex.eof()) throw ParseError("unterminated comment", line, col);
      lex.get();
      continue;
    }
    if (c == ';') {
      while (!lex.eof() && lex.peek() != '\n') lex.get();
      continue;
    }
    if (c == '(') {
      // Skip a (possibly nested) variation, honouring comments inside it.
      int depth = 0;
      while (true) {
        if (lex.eof()) throw ParseError("unterminated variation", line, col);
        const char v = lex.get();
        if (v == '(') ++depth;
        if (v == ')' && --depth == 0) break;
        if (v == '{') {
          while (!lex.eof() && lex.peek() != '}') lex.get();
          if (lex.eof()) throw ParseError("unterminated comment", line, col);
          lex.get();
        }
      }
      continue;
    }
    if (c == ')') throw ParseError("unbalanced ')'", line, col);

    std::string tok;
    while (!lex.eof()) {
      const char v = lex.peek();
      if (std::isspace(static_cast<unsigned char>(v)) || v == '{' || v == '(' || v == ')' || v == ';' || v == '[') break;
      tok += lex.get();
    }
    if (tok.empty()) throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    if (tok[0] == '$') {
      if (tok.size() < 2 || !std::all_of(tok.begin() + 1, tok.end(), [](char d) { return std::isdigit(static_cast<unsigned char>(d)); }))
        throw ParseError("malformed NAG '" + tok + "'", line, col);
      continue;
    }
    if (detail::is_result_token(tok)) {
      finish(tok);
      continue;
    }
    // Move number indications: "12." or "12..." possibly glued to the SAN.
    std::size_t digits = 0;
    while (digits < tok.size() && std::isdigit(static_cast<unsigned char>(tok[digits]))) ++digits;
    if (digits > 0 && digits < tok.size() && tok[digits] == '.') {
      std::size_t k = digits;
      while (k < tok.size() && tok[k] == '.') ++k;
      tok = tok.substr(k);
      if (tok.empty()) continue;
    } else if (digits == tok.size()) {
      throw ParseError("stray number '" + tok + "' in movetext", line, col);
    }
    cur.moves.push_back(parse_san(tok, line, col));
  }
  if (in_game) {
    if (!cur.moves.empty() || movetext_started) throw ParseError("game is missing its result token", lex.line(), lex.column());
    throw ParseError("tag section without movetext", lex.line(), lex.column());
  }
  return games;
}

/// Initial position of a game: the FEN tag when SetUp is present, else the
/// standard start. Non-standard variants are rejected.
inline GamePosition game_start_position(const PgnGame& game) {
  if (auto variant = game.tag("Variant")) {
    std::string v = *variant;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (v != "standard" && v != "chess") throw ParseError("unsupported variant '" + *variant + "'");
  }
  if (auto fen = game.tag("FEN")) return parse_fen(*fen);
  return start_position();
}

/// Full FEN after every ply of one game (starting position excluded).
inline std::vector<std::string> game_fens(const PgnGame& game) {
  GamePosition pos = game_start_position(game);
  std::vector<std::string> out;
  out.reserve(game.moves.size());
  for (const SanMove& m : game.moves) {
    pos = apply_san(pos, m);
    out.push_back(full_fen(pos));
  }
  return out;
}

inline std::vector<std::string> pgn_to_fens(std::string_view text) {
  auto games = parse_pgn(text);
  // A bare result token with no tags still counts as one (empty) game.
  if (games.size() > 1) throw ParseError("expected a single game, found " + std::to_string(games.size()));
  if (games.empty()) return {};
  return game_fens(games.front());
}

// ---------------------------------------------------------------------------
// Random placements (used by the synthetic dataset)

/// Random placement with exactly one king per side, at most 16 pieces per
/// side and no pawns on the back ranks.
template <typename Rng>
BoardState random_placement(Rng& rng, double fill = -1.0) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (fill < 0) fill = 0.15 + 0.45 * unit(rng);
  BoardState b;
  std::vector<int> free_squares(64);
  for (int i = 0; i < 64; ++i) free_squares[i] = i;
  std::shuffle(free_squares.begin(), free_squares.end(), rng);
  b[free_squares[0]] = PieceLabel::K;
  b[free_squares[1]] = PieceLabel::k;
  int count[2] = {1, 1};
  static constexpr PieceLabel kOthers[10] = {PieceLabel::P, PieceLabel::N, PieceLabel::B, PieceLabel::R, PieceLabel::Q,
                                             PieceLabel::p, PieceLabel::n, PieceLabel::b, PieceLabel::r, PieceLabel::q};
  std::uniform_int_distribution<int> pick(0, 9);
  for (std::size_t i = 2; i < free_squares.size(); ++i) {
    if (unit(rng) >= fill) continue;
    const int s = free_squares[i];
    PieceLabel l = kOthers[pick(rng)];
    const int side = is_white(l) ? 0 : 1;
    if (count[side] >= 16) continue;
    const int rank = SquareIndex(s).rank();
    if (kind_of(l) == PieceKind::Pawn && (rank == 1 || rank == 8)) continue;
    b[s] = l;
    ++count[side];
  }
  return b;
}

}  // namespace cvchess
