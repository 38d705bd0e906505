#pragma once

#include <cmath>
#include <limits>

namespace berknash {

// Nonnegative extended real: a finite value or +infinity. Divergences are
// carried in this type rather than as sentinel doubles so that the
// conventions 0*inf = 0 (under an m-weight of zero) and inf+x = inf are
// applied explicitly at the call sites that own them.
class ExtReal {
 public:
  ExtReal() : val_(0.0), inf_(false) {}
  explicit ExtReal(double v) : val_(v), inf_(false) {}

  static ExtReal infinity() {
    ExtReal r;
    r.inf_ = true;
    r.val_ = std::numeric_limits<double>::infinity();
    return r;
  }

  bool is_infinite() const { return inf_; }
  // Finite payload; +inf as a double when infinite.
  double value() const {
    return inf_ ? std::numeric_limits<double>::infinity() : val_;
  }

  ExtReal& operator+=(const ExtReal& o) {
    if (o.inf_) *this = infinity();
    else if (!inf_) val_ += o.val_;
    return *this;
  }

  // Weighted accumulation with the measure-zero convention: w == 0 never
  // propagates an infinite term.
  void add_weighted(double w, const ExtReal& o) {
    if (w == 0.0) return;
    if (o.inf_) *this = infinity();
    else if (!inf_) val_ += w * o.val_;
  }

  friend bool operator<(const ExtReal& a, const ExtReal& b) {
    if (a.inf_) return false;
    if (b.inf_) return true;
    return a.val_ < b.val_;
  }
  friend bool operator==(const ExtReal& a, const ExtReal& b) {
    if (a.inf_ || b.inf_) return a.inf_ && b.inf_;
    return a.val_ == b.val_;
  }

 private:
  double val_;
  bool inf_;
};

}  // namespace berknash
