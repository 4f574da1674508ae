#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cohortlte {

enum class Arm : std::uint8_t { Treatment = 0, Control = 1 };

/// Metric mode averages the metric over users active on a day; presence mode
/// averages the 0/1 activity indicator over the whole enrolled cohort.
enum class PanelMode : std::uint8_t { Metric, Presence };

enum class Method : std::uint8_t { CCD, DiD, MC };

/// Sample variances below this value are raised to it before any
/// inverse-variance weighting.
inline constexpr double kVarianceFloor = 1e-12;

/// Normal quantile used for every reported 95% interval.
inline constexpr double kZ95 = 1.96;

struct Observation {
    int day = 0;
    double metric = 0.0;
    bool active = true;
};

struct UserRecord {
    std::string user_id;
    Arm arm = Arm::Control;
    int entry_day = 0;
    std::vector<Observation> observations;
};

/// Malformed or inconsistent input (bad CSV rows, duplicate keys, empty logs).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A simulation configuration that cannot be realized.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A curve that cannot support a three-parameter decay fit.
class UnfittableCurve : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string_view to_string(Arm arm);
std::string_view to_string(PanelMode mode);
std::string_view to_string(Method method);

Arm parse_arm(std::string_view text);
Method parse_method(std::string_view text);

}  // namespace cohortlte
