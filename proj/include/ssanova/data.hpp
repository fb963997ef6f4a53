#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ssanova/core.hpp"

namespace ssanova {

// Column-name mapping for CSV ingestion. `subject`, `minute` and `vm` are
// required in the header; `day` is read when present. Factor columns are
// whichever the caller declares (column name doubles as factor name).
struct SchemaConfig {
    std::string subject = "subject";
    std::string day = "day";
    std::string minute = "minute";
    std::string vm = "vm";
    std::vector<std::string> factor_columns = {"group"};
    std::string time_format = "minutes";  // "minutes" | "hhmm", never guessed
};

struct ReadReport {
    std::size_t n_read = 0;     // rows kept
    std::size_t n_dropped = 0;  // rows dropped for missing vm
    std::vector<std::size_t> dropped_rows;  // 1-based data row numbers
};

// RFC-4180-style CSV (header required, quoted fields supported, UTF-8).
// Rows with a missing vm are dropped and counted; anything unparseable is an
// error naming the row.
ObservationTable read_csv(const std::string& path, const SchemaConfig& schema,
                          ReadReport* report = nullptr);

// Inverse of read_csv, with round-trip-exact numeric formatting.
void write_csv(const ObservationTable& table, const std::string& path,
               const SchemaConfig& schema);
std::string to_csv(const ObservationTable& table, const SchemaConfig& schema);

enum class AggregateMode { stack_days, mean_over_days };

// stack_days keeps every row; mean_over_days averages vm over the days
// present per (subject, minute, levels).
ObservationTable aggregate_daily(const ObservationTable& table,
                                 AggregateMode mode);

struct GroupSummary {
    std::string group;
    std::size_t n_rows = 0;
    std::size_t n_subjects = 0;
    double vm_mean = 0, vm_std = 0, vm_min = 0, vm_median = 0, vm_max = 0;
    double time_mean = 0, time_std = 0, time_min = 0, time_median = 0,
           time_max = 0;
    // share (percent) of rows at the second level of each binary factor
    std::vector<std::pair<std::string, double>> binary_percent;
};

struct SummaryTable {
    std::string group_factor;
    std::vector<GroupSummary> groups;
};

SummaryTable summarize(const ObservationTable& table,
                       const std::string& group_factor);

// ------------------------------------------------------------ synthesis ---

// Ground-truth generator mirroring eta0 + eta1(t) + eta2(g) + eta12(t,g),
// with components satisfying the ANOVA side conditions by construction.
// An empty group list produces a plain (subject, time, response) table with
// no factor column.
struct SyntheticScenario {
    std::vector<std::string> groups;
    std::string factor_name = "group";
    double eta0 = 0.0;
    std::function<double(double)> eta1;                    // on [0,1], integral 0
    std::vector<double> eta2;                              // per group, sum 0
    std::vector<std::function<double(double)>> eta12;      // per group
    double sigma_b = 0.0;
    double sigma_eps = 0.0;
    int subjects_per_group = 10;
    int minutes_per_subject = 144;
    std::uint64_t seed = 1;

    // Smooth daily shape: night inactivity, morning rise, noon bump.
    static SyntheticScenario default_scenario();

    // Projects arbitrary per-group curves f_g onto exact ANOVA components.
    static SyntheticScenario from_group_curves(
        std::vector<std::string> groups,
        std::vector<std::function<double(double)>> f_g, double sigma_b,
        double sigma_eps, int subjects_per_group, int minutes_per_subject,
        std::uint64_t seed);
};

struct TruthOracle {
    std::vector<std::string> groups;
    double eta0 = 0.0;
    std::function<double(double)> eta1_u;                  // u in [0,1]
    std::vector<double> eta2;
    std::vector<std::function<double(double)>> eta12_u;

    double eta1(double minute) const { return eta1_u(rescale_time(minute)); }
    double eta12(double minute, int g) const {
        return eta12_u.empty() ? 0.0 : eta12_u.at(g)(rescale_time(minute));
    }
    double eta(double minute, int g) const {
        double v = eta0 + eta1(minute);
        if (!eta2.empty()) v += eta2.at(g) + eta12(minute, g);
        return v;
    }
    double delta(double minute, int g, int g_star) const {
        return eta(minute, g) - eta(minute, g_star);
    }
};

std::pair<ObservationTable, TruthOracle> synthesize(
    const SyntheticScenario& scenario);

// Composite Simpson integral on [0,1] (even interval count forced).
double integrate01(const std::function<double(double)>& f, int intervals);

// Deterministic normal sampler: Box-Muller over the raw mt19937_64 stream.
// Unlike std::normal_distribution, the produced sequence is pinned by the
// standard, so generated cohorts are identical across standard libraries.
class NormalSampler {
  public:
    explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}
    double uniform();   // (0,1]
    double normal();    // standard normal
  private:
    std::mt19937_64 gen_;
};

}  // namespace ssanova
