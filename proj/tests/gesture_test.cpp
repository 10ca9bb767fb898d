#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "augment_suite.hpp"
#include "fewshot/augment.hpp"
#include "fewshot/gsjl.hpp"
#include "fewshot/synthetic.hpp"

using namespace fewshot;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("fewshot_gesture_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GestureSequence one_frame_sequence(const std::string& label, const std::string& id, std::size_t t,
                                   std::array<float, 3> wrist) {
  GestureSequence s;
  s.class_label = label;
  s.sample_id = id;
  s.original_pair = {kSyntheticOrigin, "test"};
  s.frames[t].valid = true;
  for (std::size_t p = 0; p < kLandmarks; ++p)
    for (std::size_t k = 0; k < 3; ++k) s.frames[t].coords[3 * p + k] = wrist[k] + 0.01f * static_cast<float>(p);
  return s;
}

std::string record(const std::string& frames_json, const std::string& valid_json,
                   const std::string& extra = "") {
  return "{\"class\": \"c\", \"pair\": [\"a\",\"b\"], \"sample_id\": \"s\", \"valid\": " + valid_json +
         ", \"frames\": " + frames_json + extra + "}";
}

std::string zero_frames(std::size_t n) {
  std::string f = "[";
  for (std::size_t t = 0; t < n; ++t) {
    if (t) f += ',';
    f += '[';
    for (std::size_t v = 0; v < kFrameValues; ++v) f += v ? ",0" : "0";
    f += ']';
  }
  return f + "]";
}

std::string flags(std::size_t n, bool first_true) {
  std::string f = "[";
  for (std::size_t t = 0; t < n; ++t) f += std::string(t ? "," : "") + (t == 0 && first_true ? "true" : "false");
  return f + "]";
}

}  // namespace

// ---- GSJL ----

TEST(Gsjl, EmptyInputGivesEmptyDataset) {
  std::istringstream in("");
  const auto d = read_gsjl(in);
  EXPECT_EQ(d.size(), 0u);
  EXPECT_EQ(d.class_count(), 0u);
}

TEST(Gsjl, AllInvalidFramesRejected) {
  std::istringstream in(record(zero_frames(72), flags(72, false)) + "\n");
  try {
    read_gsjl(in);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("no valid frame"), std::string::npos);
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(Gsjl, FixtureWithOneValidZeroFrameLoads) {
  std::istringstream in("# provenance comment\n\n" + record(zero_frames(72), flags(72, true)) + "\n");
  const auto d = read_gsjl(in);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].valid_count(), 1u);
}

TEST(Gsjl, SchemaErrorsCarryLineNumbers) {
  const std::string good = record(zero_frames(72), flags(72, true));
  auto expect_error = [](const std::string& text, std::size_t line, const std::string& fragment, bool schema) {
    std::istringstream in(text);
    try {
      read_gsjl(in);
      FAIL() << "accepted: " << fragment;
    } catch (const SchemaError& e) {
      EXPECT_TRUE(schema) << e.what();
      EXPECT_EQ(e.line(), line);
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    } catch (const ParseError& e) {
      EXPECT_FALSE(schema) << e.what();
      EXPECT_EQ(e.line(), line);
    }
  };
  expect_error(good + "\n{not json\n", 2, "", false);
  expect_error(good + "\n" + record(zero_frames(71), flags(71, true)) + "\n", 2, "72", true);
  std::string nonzero_invalid = record(zero_frames(72), flags(72, true));
  nonzero_invalid.replace(nonzero_invalid.rfind("0]"), 1, "5");
  expect_error(nonzero_invalid, 1, "invalid but has nonzero", true);
  expect_error(record(zero_frames(72), flags(72, true), ", \"extra\": 1"), 1, "unknown key", true);
  std::string dup = good;
  expect_error(good + "\n" + dup + "\n", 2, "duplicate", true);
}

TEST(Gsjl, ZIsClampedOnLoad) {
  std::string text = record(zero_frames(72), flags(72, true));
  text.replace(text.find("\"frames\": [[0,0,0"), 17, "\"frames\": [[0,0,7");
  std::istringstream in(text);
  EXPECT_EQ(read_gsjl(in)[0].frames[0].coords[2], 1.0f);
}

TEST(Gsjl, CanonicalKeyOrder) {
  const auto d = gen_synthetic(2, 1, 0.01, 3);
  const std::string line = to_gsjl_line(d[0]);
  const auto pos = [&](const char* k) { return line.find(k); };
  EXPECT_EQ(pos("{\"class\": "), 0u);
  EXPECT_LT(pos("\"class\""), pos("\"pair\""));
  EXPECT_LT(pos("\"pair\""), pos("\"sample_id\""));
  EXPECT_LT(pos("\"sample_id\""), pos("\"valid\""));
  EXPECT_LT(pos("\"valid\""), pos("\"frames\""));
  EXPECT_EQ(line.find('\n'), std::string::npos);
}

TEST(Gsjl, RoundTripIsIdentity) {
  auto d = gen_synthetic(5, 4, 0.03, 11);
  // Awkward float values: subnormals, negative zero, extreme exponents.
  GestureSequence odd = d[0];
  odd.sample_id = "odd";
  odd.frames[*odd.first_valid()].coords[0] = 1.17549435e-38f;
  odd.frames[*odd.first_valid()].coords[1] = 1e-45f;
  odd.frames[*odd.first_valid()].coords[2] = -0.0f;
  odd.frames[*odd.first_valid()].coords[3] = 0.1f;
  odd.frames[*odd.first_valid()].coords[4] = 3.4028235e38f;
  odd.class_label = "quoted \"label\" \\ with unicode \xc3\xa9";
  std::vector<GestureSequence> all = d.samples();
  all.push_back(odd);
  const GestureDataset data(all);

  const std::string path = temp_path("roundtrip.gsjl");
  save_gsjl(data, path);
  const auto back = load_gsjl(path);
  EXPECT_EQ(back, data);
  // Bit-exact for every value; -0 is written as 0.
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t t = 0; t < kSequenceLength; ++t)
      for (std::size_t v = 0; v < kFrameValues; ++v) {
        const float want = data[i].frames[t].coords[v], got = back[i].frames[t].coords[v];
        if (want == 0.0f)
          ASSERT_EQ(std::bit_cast<std::uint32_t>(got), 0u);
        else
          ASSERT_EQ(std::bit_cast<std::uint32_t>(got), std::bit_cast<std::uint32_t>(want));
      }
  std::remove(path.c_str());
}

TEST(Gsjl, SavesAreByteIdentical) {
  const auto d = gen_synthetic(3, 2, 0.02, 5);
  const std::string p1 = temp_path("a.gsjl"), p2 = temp_path("b.gsjl");
  save_gsjl(d, p1);
  save_gsjl(d, p2);
  EXPECT_EQ(slurp(p1), slurp(p2));
  save_gsjl(GestureDataset{}, p1);
  EXPECT_EQ(slurp(p1), "");
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST(Gsjl, MissingFileIsIoError) { EXPECT_THROW(load_gsjl("/nonexistent/dir/x.gsjl"), IoError); }

TEST(Gsjl, CommittedFixtureLoads) {
  const auto d = load_gsjl(FEWSHOT_FIXTURE_DIR "/two_classes.gsjl");
  EXPECT_EQ(d.class_count(), 2u);
  EXPECT_EQ(d.size(), 4u);
  for (const auto& s : d.samples()) EXPECT_NO_THROW(validate_sequence(s));
  const std::string p = temp_path("fixture_copy.gsjl");
  save_gsjl(d, p);
  EXPECT_EQ(slurp(p), slurp(FEWSHOT_FIXTURE_DIR "/two_classes.gsjl"));
  std::remove(p.c_str());
}

// ---- concat_gestures ----

TEST(Concat, ZeroOffsetKeepsCoordinates) {
  auto a = one_frame_sequence("a", "a0", 3, {0.5f, 0.5f, 0.f});
  const auto out = concat_gestures(a, a);
  EXPECT_EQ(out.frames[3], a.frames[3]);
  EXPECT_EQ(out.frames[4], a.frames[3]);
  EXPECT_EQ(out.valid_count(), 2u);
  EXPECT_EQ(out.class_label, "a+a");
}

TEST(Concat, WristShiftArithmetic) {
  const auto a = one_frame_sequence("a", "a0", 10, {0.5f, 0.5f, 0.f});
  auto b = one_frame_sequence("b", "b0", 0, {0.2f, 0.2f, 0.f});
  b.frames[1] = b.frames[0];
  for (float& v : b.frames[1].coords) v += 0.05f;
  const auto out = concat_gestures(a, b);
  ASSERT_TRUE(out.frames[11].valid && out.frames[12].valid);
  for (std::size_t t : {11u, 12u}) {
    const auto& src = b.frames[t - 11];
    for (std::size_t v = 0; v < kFrameValues; ++v) {
      const float d = v % 3 == 2 ? 0.f : 0.5f - 0.2f;
      EXPECT_EQ(out.frames[t].coords[v], src.coords[v] + d);
      EXPECT_NEAR(out.frames[t].coords[v] - src.coords[v], v % 3 == 2 ? 0.0 : 0.3, 1e-6);
    }
  }
  for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(out.frames[11].wrist()[k] - out.frames[10].wrist()[k]), 1e-6);
  EXPECT_EQ(out.original_pair, (std::pair<std::string, std::string>{"a", "b"}));
}

TEST(Concat, RejectsEmptyInputs) {
  GestureSequence empty;
  empty.sample_id = "e";
  const auto a = one_frame_sequence("a", "a0", 0, {0.5f, 0.5f, 0.f});
  EXPECT_THROW(concat_gestures(empty, a), InvalidInputError);
  EXPECT_THROW(concat_gestures(a, empty), InvalidInputError);
}

TEST(Concat, RandomSuite) {
  const auto rep = augsuite::run(1000, 99);
  EXPECT_EQ(rep.calls, 1000u);
  EXPECT_EQ(rep.wrong_length, 0u);
  EXPECT_EQ(rep.bad_structure, 0u);
  EXPECT_EQ(rep.geometry_changed, 0u);
  EXPECT_LT(rep.max_junction_gap, 1e-6);
}

TEST(Concat, OverflowKeepsJunctionFramesAndEnds) {
  GestureSequence a, b;
  a.class_label = "a";
  a.sample_id = "a";
  b.class_label = "b";
  b.sample_id = "b";
  for (std::size_t t = 0; t < 60; ++t) {
    a.frames[t].valid = true;
    a.frames[t].coords[0] = 0.01f * static_cast<float>(t);
    b.frames[t + 5].valid = true;
    b.frames[t + 5].coords[1] = 0.01f * static_cast<float>(t);
  }
  const auto out = concat_gestures(a, b);
  EXPECT_EQ(out.valid_count(), 72u);
  EXPECT_EQ(out.frames[0], a.frames[0]);
  EXPECT_EQ(out.frames[71].coords[1], b.frames[64].coords[1] + (a.frames[59].wrist()[1] - b.frames[5].wrist()[1]));
}

TEST(Concat, NearlyFullPartsShareTheBudget) {
  GestureSequence a, b;
  a.class_label = "a";
  a.sample_id = "a";
  b.class_label = "b";
  b.sample_id = "b";
  for (std::size_t t = 0; t < 72; ++t) {
    a.frames[t].valid = t < 71;
    a.frames[t].coords[0] = 0.01f * static_cast<float>(t);
    b.frames[t].valid = true;
    b.frames[t].coords[1] = 0.01f * static_cast<float>(t);
  }
  a.frames[71].coords[0] = 0;
  const auto out = concat_gestures(a, b);
  EXPECT_EQ(out.valid_count(), 72u);
  EXPECT_EQ(out.frames[0], a.frames[0]);
  EXPECT_EQ(out.frames[71].coords[1], b.frames[71].coords[1] + (a.frames[70].wrist()[1] - b.frames[0].wrist()[1]));
  std::size_t from_a = 0;
  while (!(out.frames[from_a] == a.frames[70])) ++from_a;
  EXPECT_EQ(from_a + 1, 35u);  // 71 * 72 / 143
}

// ---- build_combined_dataset ----

TEST(Combined, TwoClassesOnePair) {
  const auto base = gen_synthetic(2, 4, 0.01, 1);
  const auto out = build_combined_dataset(base, 3, 5, 1);
  EXPECT_EQ(out.class_count(), 1u);
  EXPECT_EQ(out.size(), 3u);
  const auto label = out.classes()[0];
  EXPECT_NE(label.find('+'), std::string::npos);
}

TEST(Combined, AllOrderedPairsCount) {
  const auto base = gen_synthetic(26, 1, 0.0, 2);
  const auto out = build_combined_dataset(base, 1, 5);
  EXPECT_EQ(out.class_count(), 26u * 25u);
  for (const auto& c : out.classes()) {
    const auto& s = out[out.indices_of(c)[0]];
    EXPECT_NE(s.original_pair.first, s.original_pair.second);
  }
}

TEST(Combined, DeterministicBytes) {
  const auto base = gen_synthetic(4, 6, 0.02, 3);
  std::ostringstream a, b;
  write_gsjl(a, build_combined_dataset(base, 4, 77, 5));
  write_gsjl(b, build_combined_dataset(base, 4, 77, 5));
  EXPECT_EQ(a.str(), b.str());
  std::ostringstream c;
  write_gsjl(c, build_combined_dataset(base, 4, 78, 5));
  EXPECT_NE(a.str(), c.str());
}

TEST(Combined, CapacityErrorNamesClass) {
  const auto base = gen_synthetic(3, 2, 0.01, 3);
  try {
    build_combined_dataset(base, 3, 1);
    FAIL();
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find(base.classes()[0]), std::string::npos);
  }
  EXPECT_THROW(build_combined_dataset(gen_synthetic(2, 2, 0, 1).restrict_to({detail::class_label(0)}), 1, 1),
               InvalidInputError);
}

// ---- split_by_original_class ----

TEST(Split, SixOriginalsTwoTwoTwo) {
  const auto base = gen_synthetic(6, 3, 0.01, 4);
  const auto combined = build_combined_dataset(base, 2, 9);
  const auto s = split_by_original_class(combined, SplitSpec{2, 2, 2, 13});
  const std::array<const GestureDataset*, 3> parts{&s.train, &s.val, &s.test};
  for (std::size_t g = 0; g < 3; ++g) {
    EXPECT_EQ(parts[g]->class_count(), 2u);  // both ordered pairs of the group
    const std::set<std::string> group(s.groups[g].begin(), s.groups[g].end());
    for (const auto& c : parts[g]->classes()) {
      const auto& smp = (*parts[g])[parts[g]->indices_of(c)[0]];
      EXPECT_TRUE(group.count(smp.original_pair.first) && group.count(smp.original_pair.second)) << c;
    }
  }
  EXPECT_EQ(s.dropped_classes, 30u - 6u);
}

TEST(Split, DisjointOverThousandSeeds) {
  const auto base = gen_synthetic(9, 1, 0.0, 4);
  const auto combined = build_combined_dataset(base, 1, 3);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto s = split_by_original_class(combined, SplitSpec{3, 3, 3, seed});
    std::array<std::set<std::string>, 3> used;
    const std::array<const GestureDataset*, 3> parts{&s.train, &s.val, &s.test};
    for (std::size_t g = 0; g < 3; ++g)
      for (const auto& smp : parts[g]->samples())
        for (const auto& o : original_classes(smp)) used[g].insert(o);
    for (std::size_t g = 0; g < 3; ++g)
      for (std::size_t h = g + 1; h < 3; ++h)
        for (const auto& o : used[g]) ASSERT_EQ(used[h].count(o), 0u) << "seed " << seed;
  }
}

TEST(Split, InfeasibleAndInvalidSpecs) {
  const auto base = gen_synthetic(4, 1, 0.0, 4);
  const auto combined = build_combined_dataset(base, 1, 3);
  EXPECT_THROW(split_by_original_class(combined, SplitSpec{2, 2, 2, 1}), InfeasibleSplitError);
  // One original per group leaves no combined class anywhere.
  EXPECT_THROW(split_by_original_class(combined, SplitSpec{1, 1, 1, 1}), InfeasibleSplitError);
  EXPECT_THROW(split_by_original_class(combined, SplitSpec{0, 2, 2, 1}), InvalidInputError);
}

TEST(Split, TwentySixBaseClassesShape) {
  // Ordered pairs of distinct classes: 26 * 25; a split keeps g * (g - 1) per group.
  const auto combined = build_combined_dataset(gen_synthetic(26, 1, 0.01, 3), 1, 5);
  EXPECT_EQ(combined.class_count(), 650u);
  const auto sp = split_by_original_class(combined, SplitSpec{10, 8, 8, 2});
  EXPECT_EQ(sp.train.class_count(), 90u);
  EXPECT_EQ(sp.val.class_count(), 56u);
  EXPECT_EQ(sp.test.class_count(), 56u);
  EXPECT_EQ(sp.dropped_classes, 650u - 90u - 56u - 56u);
}

TEST(Split, HoldOutSamples) {
  const auto d = gen_synthetic(3, 5, 0.01, 2);
  const auto [rest, held] = hold_out_samples(d, 2, 8);
  EXPECT_EQ(held.size(), 6u);
  EXPECT_EQ(rest.size(), 9u);
  for (const auto& s : held.samples())
    for (const auto& r : rest.samples()) EXPECT_NE(s.sample_id, r.sample_id);
  EXPECT_THROW(hold_out_samples(d, 5, 1), CapacityError);
}

// ---- gen_synthetic ----

TEST(Synthetic, NoiselessSamplesIdentical) {
  const auto d = gen_synthetic(6, 3, 0.0, 1);
  for (const auto& c : d.classes()) {
    const auto& idx = d.indices_of(c);
    for (std::size_t i : idx) EXPECT_EQ(d[i].frames, d[idx[0]].frames);
  }
}

TEST(Synthetic, DeterministicBytes) {
  std::ostringstream a, b, c;
  write_gsjl(a, gen_synthetic(4, 3, 0.02, 7));
  write_gsjl(b, gen_synthetic(4, 3, 0.02, 7));
  write_gsjl(c, gen_synthetic(4, 3, 0.02, 8));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(Synthetic, ValidFractionBand) {
  const auto d = gen_synthetic(40, 25, 0.01, 3);
  ASSERT_EQ(d.size(), 1000u);
  double valid = 0;
  for (const auto& s : d.samples()) valid += static_cast<double>(s.valid_count());
  const double frac = valid / (1000.0 * kSequenceLength);
  EXPECT_GE(frac, 0.60);
  EXPECT_LE(frac, 0.68);
}

TEST(Synthetic, InvariantsHold) {
  const auto d = gen_synthetic(12, 4, 0.3, 5);
  EXPECT_EQ(d.class_count(), 12u);
  for (const auto& s : d.samples()) {
    EXPECT_NO_THROW(validate_sequence(s));
    EXPECT_EQ(s.original_pair.first, kSyntheticOrigin);
    for (const auto& f : s.frames)
      for (std::size_t v = 0; v < kFrameValues; ++v) {
        if (v % 3 == 2) {
          EXPECT_LE(std::abs(f.coords[v]), 1.0f);
        } else {
          EXPECT_GE(f.coords[v], 0.0f);
          EXPECT_LE(f.coords[v], 1.0f);
        }
      }
  }
  EXPECT_THROW(gen_synthetic(1, 3, 0.0, 1), InvalidInputError);
}

TEST(Synthetic, LargerDrawsExtendSmallerOnes) {
  const std::vector<std::size_t> ids{3, 17};
  const auto small = gen_synthetic_classes(ids, 2, 0.05, 9);
  const auto big = gen_synthetic_classes(ids, 5, 0.05, 9);
  for (const auto& s : small.samples()) {
    bool found = false;
    for (const auto& t : big.samples()) found = found || (t == s);
    EXPECT_TRUE(found) << s.sample_id;
  }
  EXPECT_EQ(synthetic_class_id(detail::class_label(17)), 17u);
  EXPECT_THROW(synthetic_class_id("nope"), InvalidInputError);
}

TEST(Synthetic, ClassesAreDistinctTrajectories) {
  const auto d = gen_synthetic(40, 1, 0.0, 1);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j) EXPECT_NE(d[i].frames, d[j].frames);
}
