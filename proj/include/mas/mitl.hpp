#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mas {

using ServiceSet = std::set<std::string>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kTimeTolerance = 1e-9;

struct TimeInterval {
  double lower = 0.0;
  double upper = kInfinity;
  bool lower_closed = true;
  bool upper_closed = false;

  // Rejects singleton, reversed and negative intervals.
  static TimeInterval make(double lower, double upper, bool lower_closed, bool upper_closed);
  static TimeInterval closed(double lower, double upper) { return make(lower, upper, true, true); }
  static TimeInterval from(double lower) { return make(lower, kInfinity, true, false); }

  bool bounded() const { return upper != kInfinity; }
  bool below(double d) const;   // d has not reached the interval yet
  bool beyond(double d) const;  // d is past the interval
  bool contains(double d) const { return !below(d) && !beyond(d); }
  std::string to_string() const;
};

enum class Op { atom, negation, conjunction, next, eventually, always, until };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  Op op = Op::atom;
  std::string name;       // atoms only
  TimeInterval interval;  // temporal operators only
  FormulaPtr left;        // operand, or left side of and/until
  FormulaPtr right;       // right side of and/until
};

FormulaPtr atom(std::string name);
FormulaPtr negation(FormulaPtr f);
FormulaPtr conjunction(FormulaPtr a, FormulaPtr b);
FormulaPtr next_time(TimeInterval i, FormulaPtr f);
FormulaPtr eventually(TimeInterval i, FormulaPtr f);
FormulaPtr always(TimeInterval i, FormulaPtr f);
FormulaPtr until(TimeInterval i, FormulaPtr a, FormulaPtr b);
// Derived forms, rewritten into the core grammar.
FormulaPtr disjunction(FormulaPtr a, FormulaPtr b);
FormulaPtr truth();
FormulaPtr falsity();

inline constexpr std::string_view kTruthAtom = "true";

bool is_temporal(Op op);
bool is_propositional(const Formula& f);
// No temporal operator below another temporal operator.
bool is_flat(const Formula& f);
std::set<std::string> atoms(const Formula& f);
std::string to_string(const Formula& f);

FormulaPtr parse(std::string_view text);

// Letter-level truth of a propositional formula.
bool holds(const Formula& f, const ServiceSet& letter);

struct Letter {
  ServiceSet services;
  double time = 0.0;
};

// Ultimately periodic timed word. Cycle letters carry the absolute times of
// their first occurrence; iteration k adds k * period.
class TimedWord {
 public:
  TimedWord(std::vector<Letter> prefix, std::vector<Letter> cycle, double period);

  std::size_t prefix_length() const noexcept { return prefix_.size(); }
  std::size_t cycle_length() const noexcept { return cycle_.size(); }
  std::size_t canonical_size() const noexcept { return prefix_.size() + cycle_.size(); }
  double period() const noexcept { return period_; }
  const std::vector<Letter>& prefix() const noexcept { return prefix_; }
  const std::vector<Letter>& cycle() const noexcept { return cycle_; }

  std::size_t canonical(std::size_t j) const;
  double time(std::size_t j) const;
  const ServiceSet& letter(std::size_t j) const;

 private:
  std::vector<Letter> prefix_;
  std::vector<Letter> cycle_;
  double period_;
};

inline constexpr std::size_t kDefaultHorizon = 100'000;

bool evaluate(const TimedWord& w, const Formula& f, std::size_t position = 0,
              std::size_t horizon = kDefaultHorizon);

}  // namespace mas
