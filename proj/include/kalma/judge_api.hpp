#pragma once

// Abstract roles the metric engine and the harnesses talk to. Concrete remote
// clients and offline mocks live in judges.hpp.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kalma/kg_store.hpp"

namespace kalma {

inline constexpr double kDefaultEntailmentThreshold = 0.5;

struct EntailmentVerdict {
  bool entailed = false;
  std::optional<double> raw_score;

  static EntailmentVerdict from_score(double score,
                                      double threshold = kDefaultEntailmentThreshold) {
    return {score >= threshold, score};
  }
};

class EntailmentJudge {
 public:
  virtual ~EntailmentJudge() = default;
  virtual EntailmentVerdict entails(std::string_view premise,
                                    std::string_view hypothesis) = 0;
  virtual std::string identity() const = 0;
};

// Answers "does this sentence leave the question unanswered?". Only consulted
// when off-topic [NA] credit is enabled.
class RelevanceJudge {
 public:
  virtual ~RelevanceJudge() = default;
  virtual bool off_topic(std::string_view question, std::string_view sentence) = 0;
};

enum class QualityMetric { kCoherence, kConsistency, kFluency, kRelevance };

inline constexpr std::array<QualityMetric, 4> kQualityMetrics = {
    QualityMetric::kCoherence, QualityMetric::kConsistency,
    QualityMetric::kFluency, QualityMetric::kRelevance};

inline const char* quality_metric_name(QualityMetric m) {
  switch (m) {
    case QualityMetric::kCoherence: return "coherence";
    case QualityMetric::kConsistency: return "consistency";
    case QualityMetric::kFluency: return "fluency";
    case QualityMetric::kRelevance: return "relevance";
  }
  return "?";
}

inline std::optional<QualityMetric> parse_quality_metric(std::string_view name) {
  for (auto m : kQualityMetrics) {
    if (text::iequals(name, quality_metric_name(m))) return m;
  }
  return std::nullopt;
}

struct TextQualityScores {
  int coherence = 0;
  int consistency = 0;
  int fluency = 0;
  int relevance = 0;

  int get(QualityMetric m) const {
    switch (m) {
      case QualityMetric::kCoherence: return coherence;
      case QualityMetric::kConsistency: return consistency;
      case QualityMetric::kFluency: return fluency;
      case QualityMetric::kRelevance: return relevance;
    }
    return 0;
  }
  void set(QualityMetric m, int v) {
    switch (m) {
      case QualityMetric::kCoherence: coherence = v; break;
      case QualityMetric::kConsistency: consistency = v; break;
      case QualityMetric::kFluency: fluency = v; break;
      case QualityMetric::kRelevance: relevance = v; break;
    }
  }
};

class TextGrader {
 public:
  virtual ~TextGrader() = default;
  // `key` identifies the question for scripted graders; `knowledge` feeds the
  // consistency prompt.
  virtual int grade(std::string_view key, std::string_view question,
                    std::string_view answer, QualityMetric metric,
                    std::string_view knowledge) = 0;
  virtual std::string identity() const = 0;
};

struct GenerationRequest {
  std::string question_id;
  std::string instruction;
  std::string demonstration;
  std::vector<std::string> knowledge_block;
  std::string question;
  // Structured view of the knowledge block, for offline generators.
  std::vector<SubGraph> knowledge;
  // Facts a simulated model holds outside the provided graph. Never rendered
  // into prompts; only mock generators read it.
  std::vector<KnowledgeTriple> parametric_knowledge;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string generate(const GenerationRequest& request) = 0;
  virtual std::string identity() const = 0;
};

}  // namespace kalma
