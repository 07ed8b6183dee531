#pragma once

#include <stdexcept>
#include <string>

namespace rscn {

/// Base class for every error raised by the library.
class rscn_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension mismatch or violated precondition.
class contract_violation : public rscn_error {
public:
    using rscn_error::rscn_error;
};

/// A computation produced a non-finite value.
class numeric_overflow : public rscn_error {
public:
    numeric_overflow(const std::string& what, long step)
      : rscn_error(what), step_(step)
    {
    }
    long step() const noexcept { return step_; }

private:
    long step_;
};

/// An iterative estimator did not converge. Carries the best value reached.
class estimation_failure : public rscn_error {
public:
    estimation_failure(const std::string& what, double best_bound)
      : rscn_error(what), best_bound_(best_bound)
    {
    }
    double best_bound() const noexcept { return best_bound_; }

private:
    double best_bound_;
};

/// Malformed input file (CSV, JSON) or missing column.
class schema_error : public rscn_error {
public:
    using rscn_error::rscn_error;
};

/// Metric is undefined for the supplied data (e.g. zero target variance).
class undefined_metric : public rscn_error {
public:
    using rscn_error::rscn_error;
};

} // namespace rscn
