#include <algorithm>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "phonerec/error.hpp"
#include "phonerec/eval.hpp"
#include "phonerec/rng.hpp"

using namespace phonerec;
using namespace phonerec::eval;

namespace {

std::vector<std::string> random_sequence(Rng& rng, std::size_t max_len,
                                         const std::vector<std::string>& alphabet) {
  std::vector<std::string> seq(rng.below(max_len + 1));
  for (auto& s : seq) s = alphabet[rng.below(alphabet.size())];
  return seq;
}

const std::vector<std::string> kAbc = {"a", "b", "c", "d"};

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("frame_error_rate basics") {
  CHECK(frame_error_rate({"aa", "b"}, {"aa", "b"}) == doctest::Approx(0.0));
  // the silence frame is excluded from scoring
  CHECK(frame_error_rate({"aa", "b", "b"}, {"aa", "sil", "b"}) == doctest::Approx(0.0));
  CHECK(frame_error_rate({"aa", "aa"}, {"aa", "b"}) == doctest::Approx(50.0));
  CHECK_THROWS_AS(frame_error_rate({"aa"}, {"aa", "b"}), DataError);
  CHECK_THROWS_AS(frame_error_rate({"aa"}, {"sil"}), DataError);  // nothing scored
  CHECK(frame_error_rate({"aa"}, {"sil"}, /*include_sil=*/true) == doctest::Approx(100.0));
}

TEST_CASE("macro_f1 basics") {
  CHECK(macro_f1({"aa", "b", "iy"}, {"aa", "b", "iy"}) == doctest::Approx(1.0));
  // per-class F1 = 0.5 for both classes
  CHECK(macro_f1({"a", "b", "a", "b"}, {"a", "a", "b", "b"}) == doctest::Approx(0.5));
  // class present only in predictions drags the mean down
  CHECK(macro_f1({"a", "b"}, {"a", "a"}) == doctest::Approx((2.0 / 3.0 + 0.0) / 2.0));
}

TEST_CASE("collapse_repeats") {
  CHECK(collapse_repeats({"aa", "aa", "b", "b", "b", "aa"}) ==
        std::vector<std::string>{"aa", "b", "aa"});
  CHECK(collapse_repeats({}) == std::vector<std::string>{});
  CHECK(collapse_repeats({"sil", "aa", "sil", "sil", "b"}) ==
        std::vector<std::string>{"aa", "b"});
}

TEST_CASE("collapse_repeats is idempotent") {
  Rng rng(3);
  std::vector<std::string> alphabet = kAbc;
  alphabet.push_back(kSilence);
  for (int i = 0; i < 200; ++i) {
    const auto seq = random_sequence(rng, 20, alphabet);
    const auto once = collapse_repeats(seq);
    CHECK(collapse_repeats(once) == once);
  }
}

TEST_CASE("levenshtein known cases") {
  const auto e = levenshtein({"b", "iy"}, {"b", "ih", "iy"});
  CHECK(e.ins == 1);
  CHECK(e.del == 0);
  CHECK(e.sub == 0);
  const auto zero = levenshtein({"a", "b"}, {"a", "b"});
  CHECK(zero.total() == 0);
}

TEST_CASE("levenshtein matches the exhaustive oracle") {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const auto ref = random_sequence(rng, 8, kAbc);
    const auto hyp = random_sequence(rng, 8, kAbc);
    CHECK(levenshtein(ref, hyp).total() == oracles::exhaustive_edit_distance(ref, hyp));
  }
}

TEST_CASE("levenshtein symmetry and triangle inequality") {
  Rng rng(29);
  for (int i = 0; i < 300; ++i) {
    const auto a = random_sequence(rng, 8, kAbc);
    const auto b = random_sequence(rng, 8, kAbc);
    const auto c = random_sequence(rng, 8, kAbc);
    const auto ab = levenshtein(a, b);
    const auto ba = levenshtein(b, a);
    CHECK(ab.total() == ba.total());
    CHECK(ab.ins == ba.del);
    CHECK(ab.del == ba.ins);
    CHECK(levenshtein(a, c).total() <= ab.total() + levenshtein(b, c).total());
  }
}

TEST_CASE("phone_error_rate") {
  CHECK(phone_error_rate({"aa", "aa", "b"}, {"aa", "aa", "b"}) == doctest::Approx(0.0));
  // smoothing absorbs the boundary shift
  CHECK(phone_error_rate({"aa", "aa", "b"}, {"aa", "b", "b"}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(phone_error_rate({"sil", "sil"}, {"sil", "aa"}), DataError);
}

TEST_CASE("confusion_table") {
  const LabelMap labels = LabelMap::from_symbols({"s", "z", "sil"});
  SUBCASE("perfect prediction has an empty off-diagonal") {
    std::vector<std::string> truth(50, "s");
    const auto table = confusion_table(truth, truth, labels, 10);
    CHECK(table.ranked.empty());
    CHECK(table.at(static_cast<std::size_t>(labels.index("s")),
                   static_cast<std::size_t>(labels.index("s"))) == 50);
  }
  SUBCASE("confusion percentage is the share of the true class") {
    std::vector<std::string> truth(100, "s");
    std::vector<std::string> pred(100, "s");
    for (int i = 0; i < 15; ++i) pred[static_cast<std::size_t>(i)] = "z";
    const auto table = confusion_table(pred, truth, labels, 10);
    REQUIRE(table.ranked.size() == 1);
    CHECK(table.ranked[0].truth == "s");
    CHECK(table.ranked[0].pred == "z");
    CHECK(table.ranked[0].count == 15);
    CHECK(table.ranked[0].percent == doctest::Approx(15.0));
  }
}

TEST_CASE("confusion row sums equal true-class frame counts") {
  Rng rng(71);
  const LabelMap labels = LabelMap::from_symbols({"a", "b", "c", "sil"});
  std::vector<std::string> alphabet = labels.symbols();
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> truth, pred;
    for (int i = 0; i < 200; ++i) {
      truth.push_back(alphabet[rng.below(alphabet.size())]);
      pred.push_back(alphabet[rng.below(alphabet.size())]);
    }
    const auto table = confusion_table(pred, truth, labels, -1);
    for (std::size_t t = 0; t < alphabet.size(); ++t) {
      long long row_sum = 0;
      for (std::size_t p = 0; p < alphabet.size(); ++p) row_sum += table.at(t, p);
      long long want = 0;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == alphabet[t] && truth[i] != kSilence) ++want;
      }
      CHECK(row_sum == want);
    }
  }
}

TEST_CASE("evaluate_utterances identities on oracle predictions") {
  const LabelMap labels = LabelMap::from_symbols({"a", "b", "c", "sil"});
  Rng rng(5);
  std::vector<std::vector<std::string>> truth;
  for (int u = 0; u < 10; ++u) {
    std::vector<std::string> seq;
    for (int f = 0; f < 50; ++f) seq.push_back(labels.symbols()[rng.below(4)]);
    seq[0] = "a";  // keep at least one non-silence token per utterance
    truth.push_back(std::move(seq));
  }
  const auto report = evaluate_utterances(truth, truth, labels);
  CHECK(report.fer_percent == doctest::Approx(0.0));
  CHECK(report.per_percent == doctest::Approx(0.0));
  CHECK(report.macro_f1 == doctest::Approx(1.0));
  CHECK(report.edits.total() == 0);
}

TEST_CASE("report serialization carries the metric keys") {
  const LabelMap labels = LabelMap::from_symbols({"a", "b", "sil"});
  const std::vector<std::vector<std::string>> truth = {{"a", "a", "b", "sil"}};
  const std::vector<std::vector<std::string>> pred = {{"a", "b", "b", "sil"}};
  const auto report = evaluate_utterances(pred, truth, labels);
  const auto j = nlohmann::json::parse(report_json(report));
  CHECK(j.contains("fer"));
  CHECK(j.contains("macro_f1"));
  CHECK(j.contains("per"));
  CHECK(j.contains("ins"));
  CHECK(j.contains("del"));
  CHECK(j.contains("sub"));
  CHECK(j.contains("confusion"));
  const std::string csv = confusion_csv(report);
  CHECK(csv.find("true\\pred,a,b,sil") == 0);
  const std::string text = report_text(report);
  CHECK(text.find("FER") != std::string::npos);
}

}  // TEST_SUITE
