#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "cohortlte/types.hpp"

namespace cohortlte {

/// Aggregate of one (arm, entry day, observation day) cohort slice.
struct CohortCell {
    Arm arm = Arm::Control;
    int t0 = 0;
    int t = 0;
    std::size_t n = 0;
    double mean = 0.0;
    /// Floored sample variance divided by n; zero when the cell is unusable.
    double var_of_mean = 0.0;
    bool usable = false;
    /// Covariance between this cell's mean and the mean of (arm, t0, t0),
    /// estimated from users contributing on both days. Zero when fewer than
    /// two such users exist.
    double cov_with_entry = 0.0;
    std::size_t n_paired = 0;
};

/// Triangular grid of cohort cells, t0 <= t < T, for both arms.
class CohortPanel {
public:
    CohortPanel(int horizon, PanelMode mode);

    [[nodiscard]] int horizon() const noexcept { return horizon_; }
    [[nodiscard]] PanelMode mode() const noexcept { return mode_; }

    /// Throws std::out_of_range unless 0 <= t0 <= t < T.
    [[nodiscard]] const CohortCell& cell(Arm arm, int t0, int t) const;
    [[nodiscard]] CohortCell& cell(Arm arm, int t0, int t);

    /// Number of users enrolled in cohort (arm, t0).
    [[nodiscard]] std::size_t cohort_size(Arm arm, int t0) const;
    void set_cohort_size(Arm arm, int t0, std::size_t n);

    /// Cells in (arm, t0, t) lexicographic order, treatment first.
    [[nodiscard]] std::span<const CohortCell> cells() const noexcept { return cells_; }

private:
    [[nodiscard]] std::size_t index(Arm arm, int t0, int t) const;

    int horizon_;
    PanelMode mode_;
    std::vector<CohortCell> cells_;
    std::vector<std::size_t> cohort_sizes_;
};

/// Aggregates user logs into the cohort grid.
///
/// Rejects duplicate (user, day) observations, repeated user ids, records
/// violating 0 <= t0 <= day < T, and logs without any user.
CohortPanel build_panel(std::span<const UserRecord> records, int horizon, PanelMode mode);

/// Same aggregation with each record counted `weights[i]` times. Used for
/// bootstrap replicates, where resampled users appear with multiplicity; no
/// uniqueness checks are applied to user ids.
CohortPanel build_weighted_panel(std::span<const UserRecord> records,
                                 std::span<const double> weights, int horizon,
                                 PanelMode mode);

/// Largest observation day + 1, or largest entry day + 1 if larger.
int infer_horizon(std::span<const UserRecord> records);

void write_panel_csv(std::ostream& out, const CohortPanel& panel);

}  // namespace cohortlte
