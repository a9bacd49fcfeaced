#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "bayesclear/error.hpp"
#include "bayesclear/instances.hpp"

using namespace bayesclear;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("LLG scenario") {
  const auto llg = build_llg();
  REQUIRE(llg.instance.agents.size() == 3);
  CHECK(llg.instance.agents[2].bundle == Bundle(2, {0, 1}));
  CHECK(llg.instance.agents[2].value == 10.0);
  const auto priors = llg.priors(7, 3);
  CHECK(priors[0].mean == 4.0);
  CHECK(priors[0].variance == 0.01);
  CHECK(priors[2].mean == 7.0);
  CHECK(priors[2].variance == 3.0);
}

TEST_CASE("CATS parsing") {
  const auto corpus = parse_cats(
      "% a comment\n"
      "goods 3\n"
      "bids 3\n"
      "dummy 1\n"
      "\n"
      "0 5.5 0 1 #\n"
      "1 2 2 3 #\r\n"
      "2 1e1 1 #\n");
  CHECK(corpus.num_items == 3);
  CHECK(corpus.origin == CorpusOrigin::parsed);
  REQUIRE(corpus.records.size() == 3);
  CHECK(corpus.records[0].bundle == Bundle(3, {0, 1}));
  CHECK(corpus.records[0].value == 5.5);
  CHECK(corpus.records[1].bundle == Bundle(3, {2}));
  CHECK(corpus.records[2].value == 10.0);

  const auto back = parse_cats(write_cats(corpus));
  REQUIRE(back.records.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(back.records[k].bundle == corpus.records[k].bundle);
    CHECK(back.records[k].value == corpus.records[k].value);
  }
}

TEST_CASE("CATS parse errors") {
  CHECK(code_of([] { parse_cats("0 1 0 #\n"); }) == ErrorCode::parse);
  CHECK(code_of([] { parse_cats("goods 2\nbids 1\n0 1 5 #\n"); }) == ErrorCode::parse);
  CHECK(code_of([] { parse_cats("goods 2\nbids 1\n0 -1 0 #\n"); }) == ErrorCode::parse);
  CHECK(code_of([] { parse_cats("goods 2\nbids 1\n0 1 0\n"); }) == ErrorCode::parse);
  CHECK(code_of([] { parse_cats("goods 2\nbids 1\n0 x 0 #\n"); }) == ErrorCode::parse);
  CHECK(code_of([] { parse_cats("goods 70\nbids 0\n"); }) == ErrorCode::parse);
  CHECK(code_of([] { parse_cats("goods 2\n"); }) == ErrorCode::parse);
  try {
    parse_cats("goods 2\nbids 1\n\n0 1 9 #\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("instance JSON round trip") {
  Instance inst;
  inst.id = "x-1";
  inst.num_items = 3;
  inst.agents = {{Bundle(3, {0, 2}), 1.25}, {Bundle(3, {1}), 0.1}};
  inst.priors = PriorSpec{{1, 0.5}, {0.2, 2}};
  inst.seed = 42;
  const auto back = instance_from_json(instance_to_json(inst));
  CHECK(back.id == inst.id);
  CHECK(back.num_items == 3);
  CHECK(back.seed == 42);
  REQUIRE(back.agents.size() == 2);
  CHECK(back.agents[0].bundle == inst.agents[0].bundle);
  CHECK(back.agents[1].value == 0.1);
  REQUIRE(back.priors);
  CHECK((*back.priors)[1].variance == 2.0);
  CHECK(instance_to_json(back) == instance_to_json(inst));

  CHECK(code_of([] { instance_from_json("{"); }) == ErrorCode::parse);
  CHECK(code_of([] { instance_from_json(R"({"num_items": 2})"); }) == ErrorCode::parse);
  CHECK(code_of([] {
          instance_from_json(R"({"num_items": 2, "agents": [{"bundle": [3], "value": 1}]})");
        }) == ErrorCode::parse);
}

TEST_CASE("instance validation") {
  Instance inst;
  inst.num_items = 2;
  inst.agents = {{Bundle(3, {0}), 1}};
  CHECK(code_of([&] { inst.validate(); }) == ErrorCode::dimension_mismatch);
  inst.agents = {{Bundle(2, {0}), -1}};
  CHECK(code_of([&] { inst.validate(); }) == ErrorCode::invalid_argument);
  inst.agents = {{Bundle(2, {0}), 1}};
  inst.priors = PriorSpec{};
  CHECK(code_of([&] { inst.validate(); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("split and sample") {
  Rng rng(3);
  auto corpus = generate_synthetic_corpus(CorpusStyle::paths, 8, 100, rng);
  split_corpus(corpus, 40, rng);
  const auto train = corpus.records_in(Split::train);
  const auto test = corpus.records_in(Split::test);
  CHECK(train.size() == 40);
  CHECK(test.size() == 60);
  CHECK(code_of([&] { split_corpus(corpus, 101, rng); }) == ErrorCode::precondition);

  const auto inst = sample_instance(corpus, 10, rng);
  CHECK(inst.agents.size() == 10);
  CHECK(inst.num_items == 8);
  // Values are continuous, so distinct picks show as distinct values.
  std::set<double> picked;
  for (const auto& a : inst.agents) {
    picked.insert(a.value);
    CHECK(std::any_of(test.begin(), test.end(),
                      [&](const CorpusRecord& r) { return r.value == a.value && r.bundle == a.bundle; }));
  }
  CHECK(picked.size() == 10);
  CHECK(code_of([&] { sample_instance(corpus, 61, rng); }) == ErrorCode::precondition);
}

TEST_CASE("linear prior recovers additive values") {
  const std::vector<double> w{2, 5, 1};
  std::vector<CorpusRecord> training;
  for (std::uint64_t mask = 1; mask < 8; ++mask)
    for (int rep = 0; rep < 20; ++rep) {
      const auto b = Bundle::from_mask(3, mask);
      double v = 0;
      for (int j : b.items()) v += w[std::size_t(j)];
      training.push_back({b, v, Split::train});
    }
  const auto model = fit_linear_prior(training, 3);
  for (int j = 0; j < 3; ++j) CHECK(model.weight_mean[std::size_t(j)] == doctest::Approx(w[std::size_t(j)]).epsilon(1e-3));
  CHECK(model.noise_variance == doctest::Approx(0.01));
  const auto prior = predict_agent_prior(model, Bundle(3, {0, 1}));
  CHECK(prior.mean == doctest::Approx(7).epsilon(1e-3));
  CHECK(prior.variance >= 0.01);
  CHECK(prior.variance <= 0.011);
  CHECK(predict_agent_prior(model, Bundle(3), 0.5).variance == doctest::Approx(0.5));

  // The chosen hyperparameters maximize the evidence over the grid.
  for (double s : {1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0})
    for (double n : {1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0})
      CHECK(linear_prior_log_evidence(training, 3, s, n) <= model.log_marginal_likelihood + 1e-9);

  const auto back = prior_model_from_json(prior_model_to_json(model));
  CHECK(back.weight_mean == model.weight_mean);
  CHECK(back.weight_covariance == model.weight_covariance);
  CHECK(code_of([&] { predict_agent_prior(model, Bundle(4, {0})); }) == ErrorCode::dimension_mismatch);
  CHECK(code_of([] { fit_linear_prior(std::vector<CorpusRecord>{}, 3); }) == ErrorCode::precondition);
}

TEST_CASE("prior variance grows with bundle size under noisy data") {
  Rng rng(5);
  auto corpus = generate_synthetic_corpus(CorpusStyle::arbitrary, 10, 400, rng);
  split_corpus(corpus, 200, rng);
  const auto model = fit_linear_prior(corpus);
  CHECK(model.noise_variance > 0.01);
  const auto small = predict_agent_prior(model, Bundle(10, {3}));
  CHECK(small.mean > 0);
  CHECK(small.variance >= model.noise_variance);
}

TEST_CASE("synthetic corpora") {
  for (auto style : {CorpusStyle::paths, CorpusStyle::regions, CorpusStyle::arbitrary,
                     CorpusStyle::scheduling}) {
    CHECK(parse_corpus_style(corpus_style_name(style)) == style);
    Rng a(11), b(11);
    const auto x = generate_synthetic_corpus(style, 12, 300, a);
    const auto y = generate_synthetic_corpus(style, 12, 300, b);
    CHECK(write_cats(x) == write_cats(y));
    for (const auto& r : x.records) {
      CHECK(r.value > 0);
      CHECK(r.bundle.size() >= 1);
      CHECK(r.bundle.size() <= 4);
      if (style == CorpusStyle::paths || style == CorpusStyle::scheduling) {
        const auto items = r.bundle.items();
        CHECK(items.back() - items.front() + 1 == int(items.size()));
      }
    }
  }
  Rng rng(0);
  CHECK(code_of([&] { generate_synthetic_corpus(CorpusStyle::paths, 1, 10, rng); }) ==
        ErrorCode::invalid_argument);
  CHECK(code_of([] { parse_corpus_style("cats"); }) == ErrorCode::invalid_argument);
}

TEST_CASE("OR valuations decompose into single-minded agents") {
  const std::vector<OrTerm> terms{{Bundle(3, {0}), 2}, {Bundle(3, {1, 2}), 5}};
  const auto agents = decompose_or_valuation(terms);
  REQUIRE(agents.size() == 2);
  CHECK(agents[1].bundle == Bundle(3, {1, 2}));
  CHECK(agents[1].value == 5.0);
  const std::vector<OrTerm> bad{{Bundle(3, {0}), -1}};
  CHECK(code_of([&] { decompose_or_valuation(bad); }) == ErrorCode::invalid_argument);
}
