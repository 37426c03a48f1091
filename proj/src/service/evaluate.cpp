#include "moodspring/service/evaluate.hpp"

#include <nlohmann/json.hpp>

#include "moodspring/error.hpp"

namespace moodspring::pipeline {
namespace {

struct Tally {
  std::vector<int> correct_a;
  std::vector<int> correct_b;

  void add(Group g, bool correct) { (g == Group::A ? correct_a : correct_b).push_back(correct ? 1 : 0); }

  SourceReport report(std::string name, std::string kind, double delta) const {
    SourceReport r;
    r.name = std::move(name);
    r.kind = std::move(kind);
    r.n = correct_a.size() + correct_b.size();
    double hits = 0.0;
    for (int c : correct_a) hits += c;
    for (int c : correct_b) hits += c;
    r.accuracy = r.n == 0 ? 0.0 : hits / static_cast<double>(r.n);
    if (correct_a.size() >= 2 && correct_b.size() >= 2) {
      r.disparity = fusion::bernstein_disparity(correct_a, correct_b, delta);
    }
    return r;
  }
};

}  // namespace

const SourceReport* EvaluationReport::find(std::string_view name) const {
  for (const auto& s : sources) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : sources) {
    rows.push_back({{"name", s.name},
                    {"kind", s.kind},
                    {"n", s.n},
                    {"accuracy", s.accuracy},
                    {"disparity", s.disparity ? s.disparity->to_json() : nlohmann::json(nullptr)}});
  }
  return {{"schema_version", kReportVersion}, {"report", "evaluation"}, {"delta", delta},
          {"n_samples", n_samples},          {"n_A", n_a},             {"n_B", n_b},
          {"sources", rows}};
}

EvaluationReport evaluate_outputs(const std::vector<SampleOutputs>& outputs, const ModelSet& set, double delta) {
  if (outputs.empty()) fail(ErrorCode::InvalidInput, "evaluate: no samples");
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::InvalidInput, "evaluate: delta must lie in (0,1)");
  const std::size_t m = set.classifiers.size();
  if (m == 0) fail(ErrorCode::InvalidInput, "evaluate: model set has no classifiers");

  EvaluationReport report;
  report.delta = delta;
  report.n_samples = outputs.size();
  std::vector<Tally> per_classifier(m);
  Tally vote;
  Tally baseline;
  Tally fair;
  for (const auto& s : outputs) {
    (s.group == Group::A ? report.n_a : report.n_b) += 1;
    const Valence truth = s.pleasant ? Valence::Pleasant : Valence::Unpleasant;
    std::vector<Valence> decisions;
    std::vector<double> probs;
    for (std::size_t i = 0; i < m; ++i) {
      if (!s.present[i]) continue;
      const Valence v = valence::valence_class(s.p[i]);
      per_classifier[i].add(s.group, v == truth);
      decisions.push_back(v);
      probs.push_back(s.p[i]);
    }
    // A sample no classifier could see counts as undecided (wrong).
    vote.add(s.group, !decisions.empty() && fusion::majority_vote(decisions, probs) == truth);
    if (set.fusion_baseline) {
      baseline.add(s.group, valence::valence_class(fusion::fuse(*set.fusion_baseline, s.p)) == truth);
    }
    if (set.fusion) fair.add(s.group, valence::valence_class(fusion::fuse(*set.fusion, s.p)) == truth);
  }
  for (std::size_t i = 0; i < m; ++i) {
    report.sources.push_back(per_classifier[i].report(set.classifiers[i].name, "classifier", delta));
  }
  report.sources.push_back(vote.report("majority_vote", "majority_vote", delta));
  if (set.fusion_baseline) report.sources.push_back(baseline.report("fusion_lambda0", "fusion_lambda0", delta));
  if (set.fusion) report.sources.push_back(fair.report("fusion_fair", "fusion_fair", delta));
  return report;
}

EvaluationReport evaluate(const data::Manifest& manifest, const ModelSet& set, const valence::ValenceMapping& mapping,
                          double delta, const data::EmbeddingTable* embeddings) {
  if (manifest.rows.empty()) fail(ErrorCode::InvalidInput, "evaluate: empty manifest");
  return evaluate_outputs(collect_outputs(manifest, set, mapping, embeddings), set, delta);
}

}  // namespace moodspring::pipeline
