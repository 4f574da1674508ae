#include "cohortlte/simulate.hpp"

#include <cmath>
#include <random>
#include <string>

#include "cohortlte/parallel.hpp"
#include "cohortlte/rng.hpp"

namespace cohortlte {

double churn_factor(const SimConfig& config, double elapsed) {
    return 1.0 + config.alpha_churn * (std::exp(-config.beta_churn * elapsed) - 1.0);
}

double treated_daily_retention(const SimConfig& config, int elapsed) {
    const double prev = churn_factor(config, elapsed - 1);
    if (!(prev > 0.0)) return std::nan("");
    return config.base_retention * churn_factor(config, elapsed) / prev;
}

void validate(const SimConfig& config) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(config.T >= 2, "T must be at least 2");
    require(config.n_users >= 1, "n_users must be positive");
    require(config.base_rate_shape > 0.0 && config.base_rate_scale > 0.0,
            "base rate shape and scale must be positive");
    require(config.base_retention > 0.0 && config.base_retention <= 1.0,
            "base_retention must lie in (0, 1]");
    require(config.beta_eff > 0.0, "beta_eff must be positive");
    require(config.beta_churn > 0.0, "beta_churn must be positive");
    require(config.alpha_churn <= 1.0, "alpha_churn must not exceed 1");
    require(config.treatment_share > 0.0 && config.treatment_share < 1.0,
            "treatment_share must lie in (0, 1)");
    require(std::isfinite(config.alpha_eff) && std::isfinite(config.persistent_effect),
            "effects must be finite");
    for (int x = 1; x < config.T; ++x) {
        const double h = treated_daily_retention(config, x);
        if (!(h >= 0.0 && h <= 1.0)) {
            throw ConfigError("treated daily retention " + std::to_string(h) +
                              " outside [0, 1] on elapsed day " + std::to_string(x));
        }
    }
}

namespace {

UserRecord generate_user(const SimConfig& config, std::size_t index) {
    Engine rng = make_engine(config.seed, {stream::kUsers, index});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> entry(0, config.T - 1);
    std::gamma_distribution<double> base_rate(config.base_rate_shape, config.base_rate_scale);

    UserRecord rec;
    rec.user_id = "u" + std::to_string(index);
    rec.arm = unit(rng) < config.treatment_share ? Arm::Treatment : Arm::Control;
    rec.entry_day = entry(rng);
    const double lambda = base_rate(rng);
    const bool treated = rec.arm == Arm::Treatment;

    for (int day = rec.entry_day; day < config.T; ++day) {
        const int x = day - rec.entry_day;
        if (x > 0) {
            const double keep =
                treated ? treated_daily_retention(config, x) : config.base_retention;
            if (unit(rng) >= keep) {
                rec.observations.push_back(Observation{day, 0.0, false});
                break;
            }
        }
        double rate = lambda;
        if (treated) {
            rate += config.alpha_eff * std::exp(-config.beta_eff * x) + config.persistent_effect;
        }
        double clicks = 0.0;
        if (rate > 0.0) {
            std::poisson_distribution<long> draw(rate);
            clicks = static_cast<double>(draw(rng));
        }
        rec.observations.push_back(Observation{day, clicks, true});
    }
    return rec;
}

}  // namespace

std::vector<UserRecord> generate(const SimConfig& config, unsigned jobs) {
    validate(config);
    std::vector<UserRecord> users(static_cast<std::size_t>(config.n_users));
    parallel_for(users.size(), jobs, [&](std::size_t i) { users[i] = generate_user(config, i); });
    return users;
}

double true_lte(const SimConfig& config) { return config.persistent_effect; }

double true_delta_erlv(const SimConfig& config, int horizon) {
    const double mu = config.base_rate_shape * config.base_rate_scale;
    double total = 0.0;
    for (int x = 0; x <= horizon; ++x) {
        const double survival_c = std::pow(config.base_retention, x);
        const double effect =
            config.alpha_eff * std::exp(-config.beta_eff * x) + config.persistent_effect;
        total += (mu + effect) * survival_c * churn_factor(config, x) - mu * survival_c;
    }
    return total;
}

}  // namespace cohortlte
