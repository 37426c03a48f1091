#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "moodspring/data/csv.hpp"
#include "moodspring/data/wav.hpp"
#include "moodspring/error.hpp"
#include "moodspring/rng.hpp"
#include "moodspring/service/evaluate.hpp"
#include "moodspring/service/pipeline.hpp"
#include "support/oracles.hpp"
#include "support/stubs.hpp"

using namespace moodspring;
using namespace moodspring::pipeline;

namespace {

data::Manifest text_manifest() {
  const char* csv =
      "id,source,emotion,group,modality\n"
      "t1,what a lovely sunny day,happy,A,text\n"
      "t2,lovely calm evening,calm,B,text\n"
      "t3,i feel so happy and lovely,happy,B,text\n"
      "t4,awful terrible news,angry,A,text\n"
      "t5,this is awful and sad,sad,B,text\n"
      "t6,terrible awful day,angry,B,text\n"
      "t7,a calm lovely walk,calm,A,text\n"
      "t8,sad and awful,sad,A,text\n";
  return data::parse_manifest(csv, ".", false);
}

ModelSet expert_set(const std::vector<fusion::FusionInput>& data) {
  ModelSet set;
  set.classifiers.push_back(testing::stub_text_classifier("expert-1"));
  set.classifiers.push_back(testing::stub_text_classifier("expert-2"));
  fusion::TrainOptions plain;
  plain.lambda = 0.0;
  fusion::TrainOptions fair;
  fair.lambda = 10.0;
  set.fusion_baseline = fusion::train_fusion(data, plain);
  set.fusion = fusion::train_fusion(data, fair);
  return set;
}

std::vector<SampleOutputs> as_outputs(const std::vector<fusion::FusionInput>& data) {
  std::vector<SampleOutputs> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.push_back({"s" + std::to_string(i), data[i].group, *data[i].label, data[i].p,
                   std::vector<char>(data[i].p.size(), 1)});
  }
  return out;
}

}  // namespace

TEST_CASE("model set: round trip and validation") {
  const auto set = testing::stub_model_set();
  const auto bytes = save_model_set(*set);
  const auto back = load_model_set(bytes);
  CHECK(save_model_set(back) == bytes);
  REQUIRE(back.classifiers.size() == 2);
  CHECK(back.classifiers[0].modality == data::Modality::Audio);
  CHECK(back.fusion->w == std::vector<double>{1.0, 1.0});
  CHECK(back.indices_of(data::Modality::Text) == std::vector<std::size_t>{1});
  CHECK(back.find("text-stub") != nullptr);

  auto j = nlohmann::json::parse(bytes);
  j["schema_version"] = 2;
  try {
    load_model_set(j.dump());
    FAIL("expected FormatError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FormatError);
    CHECK(std::string(e.what()).find("version 1") != std::string::npos);
  }

  j = nlohmann::json::parse(bytes);
  j["fusion"]["w"] = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(load_model_set(j.dump()), Error);

  j = nlohmann::json::parse(bytes);
  j["classifiers"][1]["features"]["vocab"]["terms"] = {"awful", "lovely", "zebra"};
  j["classifiers"][1]["features"]["vocab"]["df"] = {1, 1, 1};
  CHECK_THROWS_AS(load_model_set(j.dump()), Error);

  CHECK_THROWS_AS(load_model_set("{\"schema_version\": 1"), Error);

  auto copy = *set;
  copy.upsert(testing::stub_text_classifier("text-stub", 0.8));
  CHECK(copy.classifiers.size() == 2);
  CHECK_FALSE(copy.fusion.has_value());
  copy.upsert(testing::stub_text_classifier("another"));
  CHECK(copy.classifiers.size() == 3);
}

TEST_CASE("stub classifiers give their closed-form outputs") {
  const valence::ValenceMapping mapping;
  const auto text = testing::stub_text_classifier();
  const auto& tf = std::get<TextFeatures>(text.features);
  CHECK(text.p_pleasant(text.model.predict_proba(text_features(tf, "Lovely!")), mapping) ==
        doctest::Approx(0.9).epsilon(1e-12));
  CHECK(text.p_pleasant(text.model.predict_proba(text_features(tf, "awful")), mapping) ==
        doctest::Approx(0.1).epsilon(1e-12));
  CHECK(text.p_pleasant(text.model.predict_proba(text_features(tf, "")), mapping) == 0.5);

  const auto sat = testing::saturated_text_classifier("sat");
  CHECK(sat.p_pleasant(sat.model.predict_proba(text_features(std::get<TextFeatures>(sat.features), "lovely")),
                       mapping) == 1.0);

  const auto audio = testing::stub_audio_classifier();
  Rng rng(3);
  dsp::AudioClip clip{std::vector<double>(16000), 16000};
  for (auto& s : clip.samples) s = rng.uniform() - 0.5;
  const auto x = audio_features(std::get<AudioFeatures>(audio.features), clip);
  CHECK(audio.p_pleasant(audio.model.predict_proba(x), mapping) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("train_classifier: text targets") {
  const auto manifest = text_manifest();
  const valence::ValenceMapping mapping;
  TrainRequest req;
  req.kind = models::ModelKind::MultinomialNb;
  const auto emo = train_classifier(manifest, req, mapping);
  CHECK(emo.name == "text-multinomial-nb");
  CHECK(emo.target() == Target::Emotion);
  CHECK(emo.model.classes() == std::vector<std::string>{"calm", "happy", "sad", "angry"});

  req.target = Target::Valence;
  req.name = "valence-nb";
  const auto val = train_classifier(manifest, req, mapping);
  CHECK(val.target() == Target::Valence);
  const auto& tf = std::get<TextFeatures>(val.features);
  CHECK(val.p_pleasant(val.model.predict_proba(text_features(tf, "lovely day")), mapping) > 0.5);
  CHECK(val.p_pleasant(val.model.predict_proba(text_features(tf, "awful news")), mapping) < 0.5);
  CHECK(emo.p_pleasant(emo.model.predict_proba(text_features(std::get<TextFeatures>(emo.features), "awful news")),
                       mapping) < 0.5);

  req.modality = data::Modality::Audio;
  CHECK_THROWS_AS(train_classifier(manifest, req, mapping), Error);
}

TEST_CASE("train_classifier: audio rows from WAV files") {
  const auto dir = std::filesystem::temp_directory_path() / "moodspring_pipeline_audio";
  std::filesystem::create_directories(dir);
  std::string csv = "id,source,emotion,group,modality\n";
  for (int i = 0; i < 8; ++i) {
    const bool high = i % 2 == 0;
    dsp::AudioClip clip{std::vector<double>(8000), 8000};
    const double f = (high ? 2000.0 : 300.0) + 10.0 * i;
    for (std::size_t n = 0; n < clip.samples.size(); ++n) {
      clip.samples[n] = 0.3 * std::sin(2.0 * M_PI * f * static_cast<double>(n) / 8000.0);
    }
    const std::string name = "clip" + std::to_string(i) + ".wav";
    data::write_wav((dir / name).string(), clip);
    csv += "c" + std::to_string(i) + "," + name + "," + (high ? "happy" : "sad") + "," + (i < 4 ? "A" : "B") +
           ",audio\n";
  }
  data::write_file((dir / "m.csv").string(), csv);
  const auto manifest = data::load_manifest((dir / "m.csv").string());

  TrainRequest req;
  req.modality = data::Modality::Audio;
  req.kind = models::ModelKind::GaussianNb;
  req.seed = 4;
  const valence::ValenceMapping mapping;
  const auto c = train_classifier(manifest, req, mapping);
  CHECK(c.model.dim() == 52);

  ModelSet set;
  set.upsert(c);
  const auto outputs = collect_outputs(manifest, set, mapping);
  REQUIRE(outputs.size() == 8);
  for (const auto& s : outputs) CHECK((s.p[0] >= 0.5) == s.pleasant);

  // same inputs, same bytes
  CHECK(save_model_set(set) == [&] {
    ModelSet again;
    again.upsert(train_classifier(manifest, req, mapping));
    return save_model_set(again);
  }());
  std::filesystem::remove_all(dir);
}

TEST_CASE("collect_outputs pairs modalities by sample key") {
  const char* csv =
      "id,source,emotion,group,modality\n"
      "a:text,lovely,happy,A,text\n"
      "b:text,awful,angry,B,text\n"
      "c:emb,c,sad,A,embedding\n";
  const auto manifest = data::parse_manifest(csv, ".", false);
  auto set = *testing::stub_model_set();
  const auto out = collect_outputs(manifest, set, valence::ValenceMapping{});
  REQUIRE(out.size() == 3);
  CHECK(out[0].p[0] == 0.5);
  CHECK(out[0].p[1] == doctest::Approx(0.9));
  CHECK(out[0].present == std::vector<char>{0, 1});
  CHECK(out[2].present == std::vector<char>{0, 0});

  const char* clash =
      "id,source,emotion,group,modality\n"
      "a:text,lovely,happy,A,text\n"
      "a:more,awful,angry,A,text\n";
  CHECK_THROWS_AS(collect_outputs(data::parse_manifest(clash, ".", false), set, {}), Error);
}

TEST_CASE("evaluate: perfect classifier and determinism") {
  const char* csv =
      "id,source,emotion,group,modality\n"
      "a,lovely,happy,A,text\n"
      "b,awful,angry,A,text\n"
      "c,lovely day,calm,B,text\n"
      "d,awful day,sad,B,text\n";
  const auto manifest = data::parse_manifest(csv, ".", false);
  ModelSet set;
  set.classifiers.push_back(testing::stub_text_classifier());
  const auto report = evaluate(manifest, set, valence::ValenceMapping{}, 0.05);
  const auto* row = report.find("text-stub");
  REQUIRE(row != nullptr);
  CHECK(row->accuracy == 1.0);
  REQUIRE(row->disparity.has_value());
  CHECK(row->disparity->acc_a == 1.0);
  CHECK(row->disparity->acc_b == 1.0);
  CHECK(row->disparity->point == 0.0);
  CHECK(report.find("majority_vote")->accuracy == 1.0);
  CHECK(report.find("fusion_fair") == nullptr);

  const auto again = evaluate(manifest, set, valence::ValenceMapping{}, 0.05);
  CHECK(report.to_json().dump(2) == again.to_json().dump(2));
  CHECK_THROWS_AS(evaluate(data::Manifest{}, set, {}, 0.05), Error);
}

TEST_CASE("evaluate: fairness fusion tightens the disparity bound on complementary experts") {
  const auto data = testing::complementary_experts(0);
  const auto set = expert_set(data);
  const auto report = evaluate_outputs(as_outputs(data), set, 0.05);
  const auto* fair = report.find("fusion_fair");
  REQUIRE(fair != nullptr);
  REQUIRE(report.find("fusion_lambda0") != nullptr);
  for (const char* single : {"expert-1", "expert-2"}) {
    CHECK(fair->disparity->upper < report.find(single)->disparity->upper);
  }
  CHECK(report.n_a == 6000);
  CHECK(report.n_b == 2000);
  const auto j = report.to_json();
  CHECK(j["sources"].size() == 5);
  CHECK(j["sources"][4]["name"] == "fusion_fair");
}
