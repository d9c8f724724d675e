#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drugrec/clustering.hpp"
#include "drugrec/dataset.hpp"
#include "drugrec/evaluation.hpp"
#include "drugrec/factorization.hpp"
#include "drugrec/knowledge_base.hpp"
#include "drugrec/recommender.hpp"
#include "drugrec/synthetic.hpp"
#include "drugrec/textprep.hpp"

// JSON encodings of models, configs and reports. Decoders of configs accept
// partial objects (missing keys keep their defaults) but reject unknown keys;
// decoders of artifacts require every field.
namespace drugrec::serial {

using json = nlohmann::json;

json encode(const Matrix& m);
void decode(const json& j, Matrix& m);

json encode(const text::Vocabulary& v);
void decode(const json& j, text::Vocabulary& v);

json encode(const clustering::UKMeansParams& p);
void decode(const json& j, clustering::UKMeansParams& p);
json encode(const clustering::MinMaxScaler& s);
void decode(const json& j, clustering::MinMaxScaler& s);
json encode(const clustering::ClusterModel& m);
void decode(const json& j, clustering::ClusterModel& m);

json encode(const SparseRatingMatrix& r);
void decode(const json& j, SparseRatingMatrix& r);

json encode(const nn::NetworkParams& n);
void decode(const json& j, nn::NetworkParams& n);
json encode(const factorization::TrainConfig& c);
void decode(const json& j, factorization::TrainConfig& c);
json encode(const factorization::FactorizationModel& m);
void decode(const json& j, factorization::FactorizationModel& m);

json encode(const kb::RuleOptions& o);
void decode(const json& j, kb::RuleOptions& o);
json encode(const kb::SafetyRuleSet& r);
void decode(const json& j, kb::SafetyRuleSet& r);

json encode(const Fractions& f);
void decode(const json& j, Fractions& f);
json encode(const rec::PipelineConfig& c);
void decode(const json& j, rec::PipelineConfig& c);

json encode(const synthetic::SyntheticConfig& c);
void decode(const json& j, synthetic::SyntheticConfig& c);

json encode(const eval::EvaluationOptions& o);
void decode(const json& j, eval::EvaluationOptions& o);
json encode(const eval::MetricsReport& r);

json encode(const ValidationReport& r);
json encode(const rec::RecommendResult& r, bool explain);

// Parses a patient query document. Throws ArgumentError on a malformed one.
rec::PatientQuery decode_patient(const json& j);

std::string loss_trace_csv(const std::vector<factorization::LossPoint>& trace);
std::string roc_csv(const eval::MetricsReport& report);
std::string metrics_csv(const eval::MetricsReport& report);

// Canonical text used for files: two-space indent, trailing newline.
std::string dump(const json& j);

// Artifact directory layout. save_artifacts returns the file names written,
// relative to dir.
std::vector<std::string> save_artifacts(const std::filesystem::path& dir,
                                        const rec::PipelineArtifacts& artifacts);
rec::PipelineArtifacts load_artifacts(const std::filesystem::path& dir);

// Required artifact files; load_artifacts names the first one missing.
extern const std::vector<std::string> kArtifactFiles;

}  // namespace drugrec::serial
