#pragma once

// Independent reference implementations and shared checks used by the unit
// tests and the acceptance runner. Nothing here calls the library routine
// it is meant to check.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bexp/inference.hpp"
#include "bexp/learning.hpp"
#include "bexp/model.hpp"

namespace oracle {

// Composition rules written straight from their defining formulas.
double compose(const bexp::RuleKind& rule, const std::vector<double>& p);

// Hand-derived composition values for the two-expert inputs (0.5, 0.7)
// and (0.7, 0.01), one entry per rule.
struct TwoExpertRow {
    bexp::Rule rule;
    double at_05_07;
    double at_07_001;
};
std::vector<TwoExpertRow> two_expert_table();

double log_likelihood(const std::vector<std::uint8_t>& x, const std::vector<double>& mu);

// Axiom checks on `cases` random opinion vectors per property; returns the
// number of failures keyed by property name.
std::map<std::string, std::size_t> check_composition_axioms(std::size_t cases, std::uint64_t seed);

// Literal closed-form update for pure-shift grids: pixel maps computed from the shift
// arithmetic, responsibilities recomputed from the transformed templates.
bexp::ExpertModel m_step(const bexp::ExpertModel& model, const std::vector<bexp::BinaryVector>& data,
                         const std::vector<bexp::Representation>& reps, bool strict_update);

// Random small pure-shift instance for the M-step comparison.
struct MStepInstance {
    bexp::ExpertModel model;
    std::vector<bexp::BinaryVector> data;
    std::vector<bexp::Representation> reps;
};
MStepInstance random_m_step_instance(std::mt19937_64& gen, const bexp::RuleKind& rule);

// Best log-likelihood over all nonempty expert subsets (identity grid).
double best_subset_loglik(const bexp::ExpertModel& model, const bexp::BinaryVector& x);

// Greedy-vs-exhaustive comparison over every x in {0,1}^D for random models.
struct SubsetReport {
    std::size_t cases = 0;
    std::size_t violations = 0;  // greedy above the best subset
    std::size_t equal = 0;       // greedy within 1e-9 of the best subset
};
SubsetReport compare_with_best_subset(std::size_t models, std::size_t dim, std::uint64_t seed);

// True when each trace step improves on the previous one by more than the tolerance.
bool trace_increasing(const bexp::Representation& rep);

// IoU of the >1/2 supports.
double iou(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace oracle
