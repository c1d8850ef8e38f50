#include "mas/mitl.hpp"

#include "mas/error.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <functional>
#include <unordered_map>

namespace mas {

namespace {

std::string number(double v) {
  if (v == kInfinity) return "inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

FormulaPtr make(Formula f) { return std::make_shared<const Formula>(std::move(f)); }

}  // namespace

TimeInterval TimeInterval::make(double lower, double upper, bool lower_closed, bool upper_closed) {
  if (!(lower >= 0.0) || std::isinf(lower))
    throw Error(Errc::invalid_argument, "interval lower bound must be finite and nonnegative");
  if (!(lower < upper))
    throw Error(Errc::invalid_argument, "interval [" + number(lower) + "," + number(upper) +
                                            "] is empty or a singleton");
  TimeInterval i;
  i.lower = lower;
  i.upper = upper;
  i.lower_closed = lower_closed;
  i.upper_closed = upper_closed && upper != kInfinity;
  return i;
}

bool TimeInterval::below(double d) const {
  return lower_closed ? d < lower - kTimeTolerance : d <= lower + kTimeTolerance;
}

bool TimeInterval::beyond(double d) const {
  if (upper == kInfinity) return false;
  return upper_closed ? d > upper + kTimeTolerance : d >= upper - kTimeTolerance;
}

std::string TimeInterval::to_string() const {
  return std::string(lower_closed ? "[" : "(") + number(lower) + "," + number(upper) +
         (upper_closed ? "]" : ")");
}

FormulaPtr atom(std::string name) { return make({Op::atom, std::move(name), {}, nullptr, nullptr}); }
FormulaPtr negation(FormulaPtr f) { return make({Op::negation, {}, {}, std::move(f), nullptr}); }
FormulaPtr conjunction(FormulaPtr a, FormulaPtr b) {
  return make({Op::conjunction, {}, {}, std::move(a), std::move(b)});
}
FormulaPtr next_time(TimeInterval i, FormulaPtr f) { return make({Op::next, {}, i, std::move(f), nullptr}); }
FormulaPtr eventually(TimeInterval i, FormulaPtr f) {
  return make({Op::eventually, {}, i, std::move(f), nullptr});
}
FormulaPtr always(TimeInterval i, FormulaPtr f) { return make({Op::always, {}, i, std::move(f), nullptr}); }
FormulaPtr until(TimeInterval i, FormulaPtr a, FormulaPtr b) {
  return make({Op::until, {}, i, std::move(a), std::move(b)});
}
FormulaPtr disjunction(FormulaPtr a, FormulaPtr b) {
  return negation(conjunction(negation(std::move(a)), negation(std::move(b))));
}
FormulaPtr truth() {
  auto t = atom(std::string(kTruthAtom));
  return negation(conjunction(t, negation(t)));
}
FormulaPtr falsity() { return negation(truth()); }

bool is_temporal(Op op) {
  return op == Op::next || op == Op::eventually || op == Op::always || op == Op::until;
}

bool is_propositional(const Formula& f) {
  if (is_temporal(f.op)) return false;
  if (f.left && !is_propositional(*f.left)) return false;
  if (f.right && !is_propositional(*f.right)) return false;
  return true;
}

bool is_flat(const Formula& f) {
  if (is_temporal(f.op))
    return (!f.left || is_propositional(*f.left)) && (!f.right || is_propositional(*f.right));
  if (f.left && !is_flat(*f.left)) return false;
  if (f.right && !is_flat(*f.right)) return false;
  return true;
}

std::set<std::string> atoms(const Formula& f) {
  std::set<std::string> out;
  std::function<void(const Formula&)> walk = [&](const Formula& g) {
    if (g.op == Op::atom && g.name != kTruthAtom) out.insert(g.name);
    if (g.left) walk(*g.left);
    if (g.right) walk(*g.right);
  };
  walk(f);
  return out;
}

namespace {

bool is_truth_pattern(const Formula& f) {
  // not(t & not t)
  if (f.op != Op::negation || f.left->op != Op::conjunction) return false;
  const auto& c = *f.left;
  return c.left->op == Op::atom && c.right->op == Op::negation && c.right->left->op == Op::atom &&
         c.left->name == c.right->left->name;
}

std::string print(const Formula& f, bool nested) {
  if (is_truth_pattern(f)) return "true";
  std::string s;
  switch (f.op) {
    case Op::atom: return f.name;
    case Op::negation:
      if (is_truth_pattern(*f.left)) return "false";
      return "!" + print(*f.left, true);
    case Op::conjunction: s = print(*f.left, true) + " & " + print(*f.right, true); break;
    case Op::next: s = "X" + f.interval.to_string() + " " + print(*f.left, true); break;
    case Op::eventually: s = "F" + f.interval.to_string() + " " + print(*f.left, true); break;
    case Op::always: s = "G" + f.interval.to_string() + " " + print(*f.left, true); break;
    case Op::until:
      s = print(*f.left, true) + " U" + f.interval.to_string() + " " + print(*f.right, true);
      break;
  }
  return nested ? "(" + s + ")" : s;
}

}  // namespace

std::string to_string(const Formula& f) { return print(f, false); }

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  FormulaPtr run() {
    auto f = disjunction_();
    skip_();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(Errc::parse_error, pos_, what);
  }

  void skip_() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept_(char c) {
    skip_();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect_(char c) {
    if (!accept_(c)) fail(std::string("expected '") + c + "'");
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '@';
  }

  std::string_view peek_word_() {
    skip_();
    std::size_t end = pos_;
    if (end < text_.size() && ident_start(text_[end]))
      while (end < text_.size() && ident_char(text_[end])) ++end;
    return text_.substr(pos_, end - pos_);
  }

  FormulaPtr disjunction_() {
    auto f = conjunction_();
    while (accept_('|')) f = disjunction(f, conjunction_());
    return f;
  }

  FormulaPtr conjunction_() {
    auto f = until_();
    while (accept_('&')) f = conjunction(f, until_());
    return f;
  }

  FormulaPtr until_() {
    auto f = unary_();
    if (peek_word_() == "U") {
      pos_ += 1;
      auto i = interval_();
      return until(i, f, until_());
    }
    return f;
  }

  FormulaPtr unary_() {
    if (accept_('!')) return negation(unary_());
    auto word = peek_word_();
    if (word == "F" || word == "G" || word == "X") {
      pos_ += 1;
      auto i = interval_();
      auto operand = unary_();
      if (word == "F") return eventually(i, operand);
      if (word == "G") return always(i, operand);
      return next_time(i, operand);
    }
    return primary_();
  }

  FormulaPtr primary_() {
    if (accept_('(')) {
      auto f = disjunction_();
      expect_(')');
      return f;
    }
    auto word = peek_word_();
    if (word.empty()) fail(pos_ < text_.size() ? "expected a formula" : "unexpected end of input");
    if (word == "U" || word == "inf") fail("unexpected keyword '" + std::string(word) + "'");
    pos_ += word.size();
    if (word == "true") return truth();
    if (word == "false") return falsity();
    return atom(std::string(word));
  }

  // Omitted interval means [0, inf).
  TimeInterval interval_() {
    skip_();
    if (pos_ >= text_.size() || (text_[pos_] != '[' && text_[pos_] != '('))
      return TimeInterval::from(0.0);
    const std::size_t start = pos_;
    const bool lower_closed = text_[pos_++] == '[';
    const double lo = constant_(false);
    expect_(',');
    const double hi = constant_(true);
    skip_();
    if (pos_ >= text_.size() || (text_[pos_] != ']' && text_[pos_] != ')'))
      fail("expected ']' or ')'");
    const bool upper_closed = text_[pos_++] == ']';
    if (!(lo < hi)) throw ParseError(Errc::parse_error, start, "interval must satisfy lower < upper");
    return TimeInterval::make(lo, hi, lower_closed, upper_closed);
  }

  double constant_(bool allow_inf) {
    skip_();
    const std::size_t start = pos_;
    if (peek_word_() == "inf") {
      if (!allow_inf) fail("lower bound cannot be inf");
      pos_ += 3;
      return kInfinity;
    }
    std::size_t end = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end, ++n;
      return n;
    };
    if (digits() == 0) fail("expected a nonnegative number");
    if (end < text_.size() && text_[end] == '.') {
      ++end;
      if (digits() == 0) fail("malformed number");
    }
    if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
      ++end;
      if (end < text_.size() && (text_[end] == '+' || text_[end] == '-')) ++end;
      if (digits() == 0) fail("malformed exponent");
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + end, v);
    pos_ = end;
    if (ec == std::errc::result_out_of_range || !std::isfinite(v) || ptr != text_.data() + end)
      throw ParseError(Errc::non_rational_constant, start, "constant is not a finite rational");
    return v;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

FormulaPtr parse(std::string_view text) { return Parser(text).run(); }

bool holds(const Formula& f, const ServiceSet& letter) {
  switch (f.op) {
    case Op::atom: return letter.count(f.name) > 0;
    case Op::negation: return !holds(*f.left, letter);
    case Op::conjunction: return holds(*f.left, letter) && holds(*f.right, letter);
    default: throw Error(Errc::unsupported_nesting, "temporal operator in a letter predicate");
  }
}

TimedWord::TimedWord(std::vector<Letter> prefix, std::vector<Letter> cycle, double period)
    : prefix_(std::move(prefix)), cycle_(std::move(cycle)), period_(period) {
  if (cycle_.empty()) throw Error(Errc::non_periodic_word, "cycle must be non-empty");
  if (!(period_ > 0.0)) throw Error(Errc::non_periodic_word, "cycle period must be positive");
  double last = -kInfinity;
  for (std::size_t j = 0; j < canonical_size(); ++j) {
    const double t = time(j);
    if (!(t >= 0.0) || !(t > last))
      throw Error(Errc::invalid_argument, "timestamps must be nonnegative and strictly increasing");
    last = t;
  }
  if (!(cycle_.front().time + period_ > last))
    throw Error(Errc::invalid_argument, "cycle period shorter than the cycle span");
}

std::size_t TimedWord::canonical(std::size_t j) const {
  if (j < prefix_.size()) return j;
  return prefix_.size() + (j - prefix_.size()) % cycle_.size();
}

double TimedWord::time(std::size_t j) const {
  if (j < prefix_.size()) return prefix_[j].time;
  const std::size_t k = j - prefix_.size();
  return cycle_[k % cycle_.size()].time + static_cast<double>(k / cycle_.size()) * period_;
}

const ServiceSet& TimedWord::letter(std::size_t j) const {
  const std::size_t c = canonical(j);
  return c < prefix_.size() ? prefix_[c].services : cycle_[c - prefix_.size()].services;
}

namespace {

class Evaluator {
 public:
  Evaluator(const TimedWord& w, std::size_t horizon) : w_(w), horizon_(horizon) {}

  const std::vector<char>& truth(const Formula& f) {
    auto it = memo_.find(&f);
    if (it != memo_.end()) return it->second;
    std::vector<char> v(w_.canonical_size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = at(f, i);
    return memo_.emplace(&f, std::move(v)).first->second;
  }

 private:
  bool sub(const Formula& f, std::size_t j) { return truth(f)[w_.canonical(j)]; }

  // Visits j = i, i+1, ... with d = tau(j) - tau(i) until visit returns a verdict,
  // d leaves the interval, or a full cycle inside an unbounded interval passes.
  // visit returns 1 (true), 0 (false) or -1 (continue).
  template <class Visit>
  bool scan(const TimeInterval& I, std::size_t i, bool exhausted, Visit visit) {
    const std::size_t p = w_.prefix_length(), c = w_.cycle_length();
    std::size_t settled = 0;
    for (std::size_t j = i;; ++j) {
      if (j - i > horizon_) throw Error(Errc::horizon_overflow, "unrolling exceeded horizon");
      const double d = w_.time(j) - w_.time(i);
      if (I.beyond(d)) return exhausted;
      int r = visit(j, d);
      if (r >= 0) return r == 1;
      if (!I.bounded() && j >= p && !I.below(d) && ++settled >= c) return exhausted;
    }
  }

  bool at(const Formula& f, std::size_t i) {
    switch (f.op) {
      case Op::atom: return w_.letter(i).count(f.name) > 0;
      case Op::negation: return !truth(*f.left)[i];
      case Op::conjunction: return truth(*f.left)[i] && truth(*f.right)[i];
      case Op::next: return f.interval.contains(w_.time(i + 1) - w_.time(i)) && sub(*f.left, i + 1);
      case Op::eventually:
        return scan(f.interval, i, false, [&](std::size_t j, double d) {
          return f.interval.contains(d) && sub(*f.left, j) ? 1 : -1;
        });
      case Op::always:
        return scan(f.interval, i, true, [&](std::size_t j, double d) {
          return f.interval.contains(d) && !sub(*f.left, j) ? 0 : -1;
        });
      case Op::until:
        return scan(f.interval, i, false, [&](std::size_t j, double d) {
          if (f.interval.contains(d) && sub(*f.right, j)) return 1;
          return sub(*f.left, j) ? -1 : 0;
        });
    }
    return false;
  }

  const TimedWord& w_;
  std::size_t horizon_;
  std::unordered_map<const Formula*, std::vector<char>> memo_;
};

}  // namespace

bool evaluate(const TimedWord& w, const Formula& f, std::size_t position, std::size_t horizon) {
  Evaluator e(w, horizon);
  return e.truth(f)[w.canonical(position)];
}

}  // namespace mas
