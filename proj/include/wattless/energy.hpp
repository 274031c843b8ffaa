#pragma once

#include "wattless/bundle.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace wattless {

struct EnergyModelParams {
    double intensity_kwh_per_gb = 0.81;
    /// Shares of the transfer term; the remainder is reported as "other".
    std::map<std::string, double> segment_shares{{"datacenter", 0.15}, {"network", 0.14}, {"device", 0.52}};
    double cpu_joules_per_dom_op = 0.5;
    double carbon_g_per_kwh = 475.0;

    /// Throws Error when a parameter is non-positive or shares exceed 1.
    void validate() const;
};

inline constexpr double joules_per_kwh = 3.6e6;

struct EnergyEstimate {
    double transfer_joules = 0;
    double cpu_joules = 0;
    double total_joules = 0;
    std::map<std::string, double> per_segment_joules;
    std::uint64_t bytes = 0;
    std::size_t dom_ops = 0;
};

struct SavingsReport {
    EnergyEstimate before;
    EnergyEstimate after;
    double delta_joules = 0;
    double delta_percent = 0;
};

struct BreakevenReport {
    double overhead_kwh = 0;
    double reduction_rate = 0;
    double breakeven_frontend_kwh = 0;
    double per_view_wh = 0; // Wh per 1000 views
    double breakeven_views = 0;
};

EnergyEstimate estimate_energy(std::uint64_t bytes, std::size_t dom_ops, const EnergyModelParams& p = {});
EnergyEstimate estimate_energy(const WeightReport& w, const EnergyModelParams& p = {});

/// Throws Error when before.total_joules is 0.
SavingsReport compute_savings(const EnergyEstimate& before, const EnergyEstimate& after);

double estimate_carbon(const EnergyEstimate& e, const EnergyModelParams& p = {});

/// Throws Error unless 0 < reduction_rate <= 1 and per_view_wh > 0.
BreakevenReport breakeven(double overhead_kwh, double reduction_rate, double per_view_wh = 50.0);

} // namespace wattless
