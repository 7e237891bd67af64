#pragma once

#include <stdexcept>
#include <string>

namespace enroll {

/// Configuration rejected during parsing/validation; `field` is the JSON path
/// of the offending entry when known.
class config_error : public std::runtime_error {
public:
    config_error(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what),
          field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Rate moments cannot be aggregated (zero variance of the cumulative rate).
class degenerate_moments_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The enrollment target exceeds what the plan can ever produce
/// (all countries capped and the caps sum below the target).
class unreachable_target_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested success probability cannot be met even at the upper bounds.
class infeasible_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Direct search refused: the allocation grid is larger than the ceiling.
class dimension_ceiling_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Differential evolution finished without any constraint-satisfying member.
class no_feasible_member_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative routine hit its iteration limit without stabilizing.
class nonconvergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace enroll
