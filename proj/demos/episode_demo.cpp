// Meta-trains a small relation network on synthetic gestures, then scores one
// 5-way 1-shot episode drawn from classes it has never seen.

#include <cstdio>

#include "fewshot/fewshot.hpp"

using namespace fewshot;

int main() {
  const auto data = gen_synthetic(20, 10, 0.05, 1);
  const auto classes = data.classes();
  const std::vector<std::string> seen(classes.begin(), classes.begin() + 15);
  const std::vector<std::string> unseen(classes.begin() + 15, classes.end());
  const auto train = data.restrict_to(seen);
  const auto test = data.restrict_to(unseen);

  RelationNetConfig net;
  net.hidden_size = 16;
  net.relation_hidden = {32, 16};
  TrainConfig cfg;
  cfg.episodes = 600;
  cfg.spec.seed = 3;
  const auto result = meta_train(train, {}, net, cfg, [](const HistoryRow& row) {
    if ((row.episode + 1) % 100 == 0) std::printf("episode %4zu  rmse %.4f\n", row.episode + 1, row.loss_rmse);
  });

  const Episode ep = sample_episode(test, EpisodeSpec{5, 1, 1, 11}, 0);
  const auto scores = forward_episode(ep, result.best);
  std::printf("\nrelation scores (rows: queries, columns: support classes)\n%-12s", "");
  for (const auto& c : ep.class_order) std::printf("%12s", c.c_str());
  std::printf("\n");
  const auto pred = predict(scores);
  for (std::size_t q = 0; q < ep.query.size(); ++q) {
    std::printf("%-12s", ep.class_order[ep.query_labels[q]].c_str());
    for (std::size_t c = 0; c < ep.n_way(); ++c) std::printf("%12.4f", scores(q, c));
    std::printf("   -> %s\n", ep.class_order[pred[q]].c_str());
  }

  const auto report = evaluate(result.best, test, EpisodeSpec{5, 1, 1, 12}, 200);
  std::printf("\nunseen-class accuracy over %zu episodes: %.3f +/- %.3f\n", report.episodes, report.accuracy,
              report.ci95_halfwidth);
}
