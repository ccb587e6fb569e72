#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace judgeprobe;

TEST_CASE("family label sets match the audit design") {
  CHECK(family_labels(FamilyId::Source) ==
        std::vector<CueLabel>{CueLabel::Human, CueLabel::Expert, CueLabel::Llm, CueLabel::Unknown});
  CHECK(family_labels(FamilyId::Temporal) == std::vector<CueLabel>{CueLabel::New, CueLabel::Old});
  CHECK(family_labels(FamilyId::Age) ==
        std::vector<CueLabel>{CueLabel::OldAuthor, CueLabel::YoungAuthor});
  CHECK(family_labels(FamilyId::Gender) ==
        std::vector<CueLabel>{CueLabel::Male, CueLabel::Female});
  CHECK(family_labels(FamilyId::Ethnicity) ==
        std::vector<CueLabel>{CueLabel::Black, CueLabel::White});
  CHECK(family_labels(FamilyId::Education) ==
        std::vector<CueLabel>{CueLabel::Educated, CueLabel::Uneducated});

  // every label belongs to exactly one family
  for (FamilyId f : kAllFamilies) {
    for (CueLabel l : family_labels(f)) CHECK(family_of(l) == f);
  }
}

TEST_CASE("swap_conditions returns the two mirror assignments") {
  auto [ab, ba] = swap_conditions(FamilyId::Temporal, CueLabel::New, CueLabel::Old);
  CHECK(ab == CueCondition{FamilyId::Temporal, CueLabel::New, CueLabel::Old});
  CHECK(ba == CueCondition{FamilyId::Temporal, CueLabel::Old, CueLabel::New});

  try {
    swap_conditions(FamilyId::Source, CueLabel::Human, CueLabel::Human);
    FAIL("expected LabelsNotDistinct");
  } catch (const CueError& e) {
    CHECK(e.kind == CueError::Kind::LabelsNotDistinct);
  }
  try {
    swap_conditions(FamilyId::Gender, CueLabel::Male, CueLabel::Old);
    FAIL("expected LabelOutsideFamily");
  } catch (const CueError& e) {
    CHECK(e.kind == CueError::Kind::LabelOutsideFamily);
  }
}

TEST_CASE("swap conditions are mirror images for every family pair") {
  for (FamilyId f : kAllFamilies) {
    auto labels = family_labels(f);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = 0; j < labels.size(); ++j) {
        if (i == j) continue;
        auto [ab, ba] = swap_conditions(f, labels[i], labels[j]);
        CHECK(ab.label_r1 == ba.label_r2);
        CHECK(ab.label_r2 == ba.label_r1);
        CHECK(ab.family == ba.family);
      }
    }
  }
}

TEST_CASE("label_pairs enumerates contrasts") {
  CHECK(label_pairs(FamilyId::Temporal) ==
        std::vector<std::pair<CueLabel, CueLabel>>{{CueLabel::New, CueLabel::Old}});
  CHECK(label_pairs(FamilyId::Temporal, true).size() == 1);

  auto basic = label_pairs(FamilyId::Source, false);
  REQUIRE(basic.size() == 3);
  CHECK(basic[0] == std::pair{CueLabel::Human, CueLabel::Unknown});
  CHECK(basic[1] == std::pair{CueLabel::Human, CueLabel::Llm});
  CHECK(basic[2] == std::pair{CueLabel::Llm, CueLabel::Unknown});

  // with Expert: all C(4,2)=6 unordered pairs, each exactly once
  auto full = label_pairs(FamilyId::Source, true);
  REQUIRE(full.size() == 6);
  std::set<std::set<int>> unordered;
  for (auto [a, b] : full) {
    unordered.insert({static_cast<int>(a), static_cast<int>(b)});
  }
  CHECK(unordered.size() == 6);
}

TEST_CASE("render_cue matches the attested sentences") {
  CHECK(render_cue(ContentType::Response, 1, CueLabel::Human) ==
        "Response 1 was written by a human author.");
  CHECK(render_cue(ContentType::Story, 2, CueLabel::New) ==
        "Story 2 was written recently (in 2025).");
  CHECK(render_cue(ContentType::Response, 2, CueLabel::Unknown) ==
        "Response 2 was generated by an unknown source.");
  CHECK(render_cue(ContentType::Response, 1, CueLabel::Expert) ==
        "Response 1 was written by a human expert in the field.");
  CHECK(render_cue(ContentType::Response, 2, CueLabel::Llm) ==
        "Response 2 was generated by a large language model (LLM).");
  CHECK(render_cue(ContentType::Story, 1, CueLabel::Old) ==
        "Story 1 was written a long time ago (in 1950).");
  CHECK(render_cue(ContentType::Response, 1, CueLabel::OldAuthor) ==
        "Response 1 was written by an old author.");
  CHECK(render_cue(ContentType::Response, 2, CueLabel::Educated) ==
        "Response 2 was written by an educated author.");
}

TEST_CASE("cue sentences share formatting and differ only in the suffix") {
  for (FamilyId f : kAllFamilies) {
    for (ContentType type : {ContentType::Response, ContentType::Story}) {
      for (int number : {1, 2}) {
        std::string prefix =
            std::string(content_type_word(type)) + " " + std::to_string(number) + " was ";
        for (CueLabel l : family_labels(f)) {
          std::string sentence = render_cue(type, number, l);
          CHECK(sentence.rfind(prefix, 0) == 0);
          CHECK(sentence.back() == '.');
          // never mentions the other response's number
          std::string other =
              std::string(content_type_word(type)) + " " + std::to_string(3 - number);
          CHECK(sentence.find(other) == std::string::npos);
        }
      }
    }
  }
}

TEST_CASE("render_cue is byte-deterministic") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    FamilyId f = kAllFamilies[bounded_uint(rng, kAllFamilies.size())];
    auto labels = family_labels(f);
    CueLabel l = labels[bounded_uint(rng, labels.size())];
    ContentType t = bounded_uint(rng, 2) ? ContentType::Story : ContentType::Response;
    int number = 1 + static_cast<int>(bounded_uint(rng, 2));
    CHECK(render_cue(t, number, l) == render_cue(t, number, l));
  }
}

TEST_CASE("cue template table round-trips through JSON and can be overridden") {
  const auto& table = default_cue_templates();
  auto j = cue_templates_to_json(table);
  auto back = cue_templates_from_json(j);
  CHECK(back.version == table.version);
  CHECK(back.phrase == table.phrase);

  testutil::TempDir dir;
  auto path = dir.path / "cues.json";
  j["phrases"]["Human"] = "typed by a person";
  testutil::write_file(path, j.dump());
  auto custom = load_cue_templates(path);
  CHECK(render_cue(ContentType::Response, 1, CueLabel::Human, custom) ==
        "Response 1 was typed by a person.");

  // a table missing a label is rejected
  j["phrases"].erase("Old");
  try {
    cue_templates_from_json(j);
    FAIL("expected BadTemplateTable");
  } catch (const CueError& e) {
    CHECK(e.kind == CueError::Kind::BadTemplateTable);
  }
}
