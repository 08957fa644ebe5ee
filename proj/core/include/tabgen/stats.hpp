// Nonparametric statistics for metric group comparisons: Kruskal-Wallis
// rank sum test (midranks, tie correction, chi-squared upper tail), the
// two-sample Wilcoxon rank sum / Mann-Whitney U test (exact distribution by
// dynamic programming for small samples, normal approximation with tie
// correction and continuity correction otherwise), Bonferroni adjustment,
// and notched boxplot summaries.

#ifndef TABGEN_STATS_HPP
#define TABGEN_STATS_HPP

#include <span>
#include <string>
#include <vector>

#include "tabgen/token.hpp"

namespace tabgen {
namespace stats {

struct MetricGroups {
    // label -> sample, insertion-ordered
    std::vector<std::pair<std::string, std::vector<double>>> groups;
};

struct KruskalWallisResult {
    double h = 0;
    int df = 0;
    double p = 1;
    bool degenerate = false;  // all values identical; reported as H=0, p=1
};

/// Kruskal-Wallis H with midranks and tie correction; p from the
/// chi-squared upper tail with k-1 degrees of freedom. Requires >= 2
/// non-empty groups and total N >= 3.
KruskalWallisResult kruskal_wallis(const MetricGroups& groups);

enum class WilcoxonMode { automatic, exact, normal };

struct WilcoxonResult {
    double u = 0;  // U statistic of the first sample
    double p_two_sided = 1;
    bool exact = false;
};

/// Two-sample Wilcoxon rank sum test. In automatic mode the exact
/// distribution is used when n_a + n_b <= 12 and there are no ties,
/// otherwise the tie-corrected normal approximation with continuity
/// correction. exact/normal force the respective path (the exact path
/// handles ties through midranks).
WilcoxonResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b,
                                 WilcoxonMode mode = WilcoxonMode::automatic);

/// alpha / m.
double bonferroni(double alpha, int m);

struct BoxplotSummary {
    double median = 0;
    double q1 = 0;
    double q3 = 0;
    double iqr = 0;
    double notch_low = 0;   // median - 1.57 * IQR / sqrt(n)
    double notch_high = 0;  // median + 1.57 * IQR / sqrt(n)
    double whisker_low = 0;
    double whisker_high = 0;
    std::vector<double> outliers;
};

/// Quartiles by linear interpolation; whiskers at the most extreme data
/// within 1.5 IQR of the quartiles. Requires n >= 1.
BoxplotSummary boxplot_summary(std::span<const double> values);

struct PairwiseComparison {
    std::string group_a;
    std::string group_b;
    double u = 0;
    double p = 0;
    bool significant = false;
};

struct PairwiseReport {
    double alpha = 0.05;
    double adjusted_alpha = 0.05;  // bonferroni(alpha, number of pairs)
    std::vector<PairwiseComparison> comparisons;

    bool significant(const std::string& a, const std::string& b) const;
};

/// All unordered group pairs tested with wilcoxon_rank_sum; each flagged
/// significant iff p < bonferroni(alpha, #pairs).
PairwiseReport pairwise_comparison_report(const MetricGroups& groups, double alpha,
                                          WilcoxonMode mode = WilcoxonMode::automatic);

/// Upper tail of the chi-squared distribution via the regularized
/// incomplete gamma function (relative error <= 1e-10).
double chi_squared_upper_tail(double x, double df);

/// Midranks of the pooled sample (average rank across ties).
std::vector<double> midranks(std::span<const double> values);

}  // namespace stats
}  // namespace tabgen

#endif  // TABGEN_STATS_HPP
