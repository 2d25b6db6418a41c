#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cmsent/corpus.hpp"
#include "cmsent/errors.hpp"
#include "doctest.h"
#include "support/tempdir.hpp"

using namespace cmsent;
using namespace cmsent::testsupport;

namespace {

std::vector<LabeledExample> numbered_examples(int n) {
  std::vector<LabeledExample> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({"doc " + std::to_string(i),
                   kClassOrder[static_cast<size_t>(i) % kNumClasses]});
  }
  return out;
}

std::multiset<std::string> texts_of(const DatasetSplit& split) {
  std::multiset<std::string> all;
  for (const auto* part : {&split.train, &split.dev, &split.test}) {
    for (const auto& ex : *part) all.insert(ex.text);
  }
  return all;
}

}  // namespace

TEST_CASE("load_dataset parses text<TAB>label lines") {
  TempDir dir("corpus-load");
  const auto path = write_file(dir.file("data.tsv"),
                               "yeh gaana bohut super hai\tpositive\n");
  const auto examples = load_dataset(path);
  REQUIRE(examples.size() == 1);
  CHECK(examples[0].text == "yeh gaana bohut super hai");
  CHECK(examples[0].label == SentimentClass::Positive);
}

TEST_CASE("load_dataset accepts label aliases and blank lines") {
  TempDir dir("corpus-labels");
  const auto path = write_file(dir.file("data.tsv"),
                               "a\tPositive\n"
                               "b\tNEGATIVE\n"
                               "c\tneutral\n"
                               "\n"
                               "d\t1\n"
                               "e\t-1\n"
                               "f\t0\r\n");
  const auto examples = load_dataset(path);
  REQUIRE(examples.size() == 6);
  CHECK(examples[0].label == SentimentClass::Positive);
  CHECK(examples[1].label == SentimentClass::Negative);
  CHECK(examples[2].label == SentimentClass::Neutral);
  CHECK(examples[3].label == SentimentClass::Positive);
  CHECK(examples[4].label == SentimentClass::Negative);
  CHECK(examples[5].label == SentimentClass::Neutral);
}

TEST_CASE("load_dataset on an empty file yields an empty list") {
  TempDir dir("corpus-empty");
  CHECK(load_dataset(write_file(dir.file("data.tsv"), "")).empty());
}

TEST_CASE("load_dataset rejects malformed input with line context") {
  TempDir dir("corpus-bad");

  SUBCASE("unknown label names the token and the line") {
    const auto path = write_file(dir.file("bad-label.tsv"), "hello\thappy\n");
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("happy"),
                         ParseError);
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("line 1"),
                         ParseError);
  }
  SUBCASE("line number counts preceding good lines") {
    const auto path = write_file(dir.file("bad-line3.tsv"),
                                 "ok\tpositive\nok\tneutral\nbad\tnope\n");
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("line 3"),
                         ParseError);
  }
  SUBCASE("missing tab") {
    const auto path = write_file(dir.file("no-tab.tsv"), "just text\n");
    CHECK_THROWS_AS(load_dataset(path), ParseError);
  }
  SUBCASE("empty text field") {
    const auto path = write_file(dir.file("no-text.tsv"), "\tpositive\n");
    CHECK_THROWS_AS(load_dataset(path), ParseError);
  }
  SUBCASE("invalid UTF-8 names the byte offset") {
    const auto path =
        write_file(dir.file("bad-utf8.tsv"), std::string("ok\tpositive\n") +
                                                 "\xFF" + "bad\tneutral\n");
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("offset 12"),
                         ParseError);
  }
  SUBCASE("missing file is an I/O error") {
    CHECK_THROWS_AS(load_dataset(dir.file("nope.tsv")), IoError);
  }
}

TEST_CASE("split_dataset slices 70/10/20 with llround sizes") {
  SUBCASE("ten examples -> 7/1/2") {
    const auto split = split_dataset(numbered_examples(10), 7);
    CHECK(split.train.size() == 7);
    CHECK(split.dev.size() == 1);
    CHECK(split.test.size() == 2);
  }
  SUBCASE("3879 examples -> 2715/388/776") {
    const auto split = split_dataset(numbered_examples(3879), 42);
    CHECK(split.train.size() == 2715);
    CHECK(split.dev.size() == 388);
    CHECK(split.test.size() == 776);
  }
  SUBCASE("single example rounds into train") {
    const auto split = split_dataset(numbered_examples(1), 3);
    CHECK(split.train.size() == 1);
    CHECK(split.dev.empty());
    CHECK(split.test.empty());
  }
}

TEST_CASE("split_dataset partitions the input deterministically") {
  const auto examples = numbered_examples(137);
  const auto a = split_dataset(examples, 99);
  const auto b = split_dataset(examples, 99);
  const auto c = split_dataset(examples, 100);

  SUBCASE("every example appears exactly once") {
    std::multiset<std::string> expected;
    for (const auto& ex : examples) expected.insert(ex.text);
    CHECK(texts_of(a) == expected);
    CHECK(a.train.size() + a.dev.size() + a.test.size() == examples.size());
  }
  SUBCASE("same seed reproduces the exact assignment") {
    CHECK(a.train == b.train);
    CHECK(a.dev == b.dev);
    CHECK(a.test == b.test);
  }
  SUBCASE("a different seed shuffles differently") {
    CHECK(a.train != c.train);
  }
  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(split_dataset({}, 1), ArgumentError);
  }
}

TEST_CASE("split_dataset_stratified keeps per-class proportions") {
  // 10 per class; the 70/10/20 rule applies inside each class.
  std::vector<LabeledExample> examples;
  for (int i = 0; i < 30; ++i) {
    examples.push_back({"doc " + std::to_string(i),
                        kClassOrder[static_cast<size_t>(i) / 10]});
  }
  const auto split = split_dataset_stratified(examples, 11);
  CHECK(split.train.size() == 21);
  CHECK(split.dev.size() == 3);
  CHECK(split.test.size() == 6);

  auto count_labels = [](const std::vector<LabeledExample>& part) {
    std::map<SentimentClass, int> by_label;
    for (const auto& ex : part) ++by_label[ex.label];
    return by_label;
  };
  for (const SentimentClass c : kClassOrder) {
    CHECK(count_labels(split.train)[c] == 7);
    CHECK(count_labels(split.dev)[c] == 1);
    CHECK(count_labels(split.test)[c] == 2);
  }

  const auto again = split_dataset_stratified(examples, 11);
  CHECK(split.train == again.train);
  CHECK(split.test == again.test);
}

TEST_CASE("save_dataset round-trips through load_dataset") {
  TempDir dir("corpus-roundtrip");
  const auto examples = numbered_examples(9);
  const auto path = dir.file("out.tsv");
  save_dataset(path, examples);
  CHECK(load_dataset(path) == examples);
}
