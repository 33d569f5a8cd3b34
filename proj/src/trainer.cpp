#include "genrank/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace genrank {

int FreeEmbeddingTable::index_of(const std::string& doc_id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == doc_id) return static_cast<int>(i);
  throw MissingIdentifierError("no embedding row for document \"" + doc_id + "\"");
}

VectorXd FreeEmbeddingTable::doc_vector(const std::string& doc_id) const {
  return rows.row(index_of(doc_id)).transpose();
}

InfoNceGrad infonce_loss(const VectorXd& q, const VectorXd& positive,
                         const std::vector<VectorXd>& negatives, double tau) {
  if (tau <= 0.0) throw ArgumentError("temperature must be positive");
  const auto d = q.size();
  if (positive.size() != d) throw ArgumentError("vector dimension mismatch in infonce");
  for (const auto& n : negatives)
    if (n.size() != d) throw ArgumentError("vector dimension mismatch in infonce");

  InfoNceGrad g;
  g.dq = VectorXd::Zero(d);
  g.dpos = VectorXd::Zero(d);
  g.dnegs.assign(negatives.size(), VectorXd::Zero(d));
  if (negatives.empty()) return g;  // degenerate softmax, loss 0

  std::vector<double> logits(negatives.size() + 1);
  logits[0] = q.dot(positive) / tau;
  for (std::size_t i = 0; i < negatives.size(); ++i) logits[i + 1] = q.dot(negatives[i]) / tau;
  double max_l = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - max_l);
  double lse = max_l + std::log(sum);
  g.loss = lse - logits[0];

  std::vector<double> prob(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) prob[i] = std::exp(logits[i] - lse);
  g.dq = (prob[0] - 1.0) / tau * positive;
  for (std::size_t i = 0; i < negatives.size(); ++i) g.dq += prob[i + 1] / tau * negatives[i];
  g.dpos = (prob[0] - 1.0) / tau * q;
  for (std::size_t i = 0; i < negatives.size(); ++i) g.dnegs[i] = prob[i + 1] / tau * q;
  return g;
}

MarginMseGrad margin_mse_loss(const std::vector<double>& student,
                              const std::vector<double>& teacher) {
  if (student.empty()) throw ArgumentError("margin_mse requires at least one pair");
  if (student.size() != teacher.size()) throw ArgumentError("margin list length mismatch");
  MarginMseGrad g;
  g.dstudent.resize(student.size());
  const double n = static_cast<double>(student.size());
  for (std::size_t i = 0; i < student.size(); ++i) {
    double diff = student[i] - teacher[i];
    g.loss += diff * diff / n;
    g.dstudent[i] = 2.0 * diff / n;
  }
  return g;
}

DsiCeGrad dsi_ce_loss(const VectorXd& h, const FreeEmbeddingTable& table, int target_index) {
  const int n = static_cast<int>(table.rows.rows());
  if (target_index < 0 || target_index >= n)
    throw ArgumentError("target index out of range in dsi_ce_loss");
  VectorXd logits = table.rows * h;
  double max_l = logits.maxCoeff();
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(logits(i) - max_l);
  double lse = max_l + std::log(sum);

  DsiCeGrad g;
  g.loss = lse - logits(target_index);
  VectorXd prob(n);
  for (int i = 0; i < n; ++i) prob(i) = std::exp(logits(i) - lse);
  prob(target_index) -= 1.0;
  g.dh = table.rows.transpose() * prob;
  g.dtable = prob * h.transpose();
  return g;
}

namespace {

struct Forward {
  VectorXd out;
  VectorXd pre;   // before normalization
  double norm = 0.0;
};

Forward run_encoder(const EncoderParams& params, const FeatureVector& x) {
  Forward f;
  f.pre = params.bias;
  for (const auto& [bucket, count] : x.entries)
    f.pre += static_cast<double>(count) * params.weight.row(bucket).transpose();
  f.out = f.pre;
  if (params.normalize) {
    f.norm = f.pre.norm();
    if (f.norm > 0.0) f.out = f.pre / f.norm;
  }
  return f;
}

void backprop_encoder(const EncoderParams& params, const FeatureVector& x, const Forward& f,
                      const VectorXd& dout, MatrixXd& dweight, VectorXd& dbias) {
  VectorXd dpre = dout;
  if (params.normalize && f.norm > 0.0)
    dpre = (dout - f.out * f.out.dot(dout)) / f.norm;
  dbias += dpre;
  for (const auto& [bucket, count] : x.entries)
    dweight.row(bucket) += static_cast<double>(count) * dpre.transpose();
}

}  // namespace

Gradients compute_gradients(const EncoderParams& params, const FreeEmbeddingTable* table,
                            const std::vector<FeatureVector>& doc_feats, const TrainBatch& batch,
                            const TrainConfig& config) {
  Gradients g;
  g.dweight = MatrixXd::Zero(params.weight.rows(), params.weight.cols());
  g.dbias = VectorXd::Zero(params.bias.size());
  if (batch.items.empty()) throw ArgumentError("empty batch");

  for (const auto& item : batch.items) {
    bool margins_present = !item.teacher_margins.empty();
    if (config.mode == TrainMode::TiedMarginMse) {
      if (item.teacher_margins.size() != item.negatives.size())
        throw ArgumentError("tied-marginmse batch needs one teacher margin per negative");
    } else if (margins_present) {
      throw ArgumentError("teacher margins only valid in tied-marginmse mode");
    }
    if (config.mode == TrainMode::FreeDsi && table == nullptr)
      throw ArgumentError("free-dsi mode requires an embedding table");
  }

  const double inv_batch = 1.0 / static_cast<double>(batch.items.size());

  switch (config.mode) {
    case TrainMode::TiedContrastive: {
      for (const auto& item : batch.items) {
        Forward fq = run_encoder(params, item.input_feat);
        Forward fpos = run_encoder(params, doc_feats.at(item.positive));
        std::vector<Forward> fnegs;
        std::vector<VectorXd> negs;
        for (int ni : item.negatives) {
          fnegs.push_back(run_encoder(params, doc_feats.at(ni)));
          negs.push_back(fnegs.back().out);
        }
        InfoNceGrad ig = infonce_loss(fq.out, fpos.out, negs, config.temperature);
        g.loss += ig.loss * inv_batch;
        backprop_encoder(params, item.input_feat, fq, ig.dq * inv_batch, g.dweight, g.dbias);
        backprop_encoder(params, doc_feats.at(item.positive), fpos, ig.dpos * inv_batch,
                         g.dweight, g.dbias);
        for (std::size_t i = 0; i < item.negatives.size(); ++i)
          backprop_encoder(params, doc_feats.at(item.negatives[i]), fnegs[i],
                           ig.dnegs[i] * inv_batch, g.dweight, g.dbias);
      }
      break;
    }
    case TrainMode::TiedMarginMse: {
      // Pool all (query, negative) pairs in the batch into one loss.
      struct Pair {
        int item;
        std::size_t neg;
      };
      std::vector<Forward> fq, fpos;
      std::vector<std::vector<Forward>> fnegs;
      std::vector<Pair> pairs;
      std::vector<double> student, teacher;
      for (std::size_t it = 0; it < batch.items.size(); ++it) {
        const auto& item = batch.items[it];
        fq.push_back(run_encoder(params, item.input_feat));
        fpos.push_back(run_encoder(params, doc_feats.at(item.positive)));
        fnegs.emplace_back();
        for (std::size_t i = 0; i < item.negatives.size(); ++i) {
          fnegs.back().push_back(run_encoder(params, doc_feats.at(item.negatives[i])));
          double pos_dot = fq.back().out.dot(fpos.back().out);
          double neg_dot = fq.back().out.dot(fnegs.back().back().out);
          student.push_back(pos_dot - neg_dot);
          teacher.push_back(item.teacher_margins[i]);
          pairs.push_back({static_cast<int>(it), i});
        }
      }
      MarginMseGrad mg = margin_mse_loss(student, teacher);
      g.loss = mg.loss;
      std::vector<VectorXd> dq(batch.items.size()), dpos(batch.items.size());
      for (std::size_t it = 0; it < batch.items.size(); ++it) {
        dq[it] = VectorXd::Zero(params.bias.size());
        dpos[it] = VectorXd::Zero(params.bias.size());
      }
      std::vector<std::vector<VectorXd>> dneg(batch.items.size());
      for (std::size_t it = 0; it < batch.items.size(); ++it)
        dneg[it].assign(batch.items[it].negatives.size(), VectorXd::Zero(params.bias.size()));
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& pr = pairs[p];
        double dm = mg.dstudent[p];
        dq[pr.item] += dm * (fpos[pr.item].out - fnegs[pr.item][pr.neg].out);
        dpos[pr.item] += dm * fq[pr.item].out;
        dneg[pr.item][pr.neg] -= dm * fq[pr.item].out;
      }
      for (std::size_t it = 0; it < batch.items.size(); ++it) {
        const auto& item = batch.items[it];
        backprop_encoder(params, item.input_feat, fq[it], dq[it], g.dweight, g.dbias);
        backprop_encoder(params, doc_feats.at(item.positive), fpos[it], dpos[it], g.dweight,
                         g.dbias);
        for (std::size_t i = 0; i < item.negatives.size(); ++i)
          backprop_encoder(params, doc_feats.at(item.negatives[i]), fnegs[it][i], dneg[it][i],
                           g.dweight, g.dbias);
      }
      break;
    }
    case TrainMode::FreeDsi: {
      g.dtable = MatrixXd::Zero(table->rows.rows(), table->rows.cols());
      for (const auto& item : batch.items) {
        Forward fh = run_encoder(params, item.input_feat);
        DsiCeGrad dg = dsi_ce_loss(fh.out, *table, item.positive);
        g.loss += dg.loss * inv_batch;
        g.dtable += dg.dtable * inv_batch;
        backprop_encoder(params, item.input_feat, fh, dg.dh * inv_batch, g.dweight, g.dbias);
      }
      break;
    }
  }
  return g;
}

TrainResult train(const std::vector<Document>& corpus, const std::vector<Query>& queries,
                  const std::vector<TrainPair>& pairs,
                  const std::map<std::string, std::vector<std::string>>& bm25_negatives,
                  const std::map<std::string, std::map<std::string, double>>& teacher_margins,
                  const EncoderParams& init, const TrainConfig& config) {
  if (config.learning_rate <= 0.0) throw ArgumentError("learning rate must be positive");
  if (config.steps < 0) throw ArgumentError("steps must be >= 0");
  if (config.batch_size < 1) throw ArgumentError("batch size must be >= 1");
  if (config.negatives_per_query < 0) throw ArgumentError("negatives_per_query must be >= 0");
  if (config.temperature <= 0.0) throw ArgumentError("temperature must be positive");
  if (config.multitask_ratio < 0.0 || config.multitask_ratio > 1.0)
    throw ArgumentError("multitask_ratio must be in [0,1]");
  if (pairs.empty() && config.steps > 0) throw ArgumentError("no training pairs");

  std::unordered_map<std::string, int> doc_index, query_index;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    doc_index[corpus[i].doc_id] = static_cast<int>(i);
  for (std::size_t i = 0; i < queries.size(); ++i)
    query_index[queries[i].query_id] = static_cast<int>(i);

  struct ResolvedPair {
    int query;
    int positive;
    std::vector<int> bm25_negs;
    std::vector<double> margins;  // aligned with bm25_negs, marginmse only
  };
  std::vector<ResolvedPair> resolved;
  for (const auto& p : pairs) {
    auto qi = query_index.find(p.query_id);
    if (qi == query_index.end())
      throw ArgumentError("training pair references unknown query \"" + p.query_id + "\"");
    auto di = doc_index.find(p.doc_id);
    if (di == doc_index.end())
      throw ArgumentError("training pair references unknown doc \"" + p.doc_id + "\"");
    ResolvedPair rp{qi->second, di->second, {}, {}};
    if (config.negatives_per_query > 0) {
      auto ni = bm25_negatives.find(p.query_id);
      if (ni != bm25_negatives.end()) {
        for (const auto& neg_id : ni->second) {
          if (static_cast<int>(rp.bm25_negs.size()) >= config.negatives_per_query) break;
          auto ndi = doc_index.find(neg_id);
          if (ndi == doc_index.end())
            throw ArgumentError("negative references unknown doc \"" + neg_id + "\"");
          rp.bm25_negs.push_back(ndi->second);
          if (config.mode == TrainMode::TiedMarginMse) {
            auto mi = teacher_margins.find(p.query_id);
            if (mi == teacher_margins.end() || !mi->second.count(neg_id))
              throw ArgumentError("missing teacher margin for (" + p.query_id + ", " + neg_id +
                                  ")");
            rp.margins.push_back(mi->second.at(neg_id));
          }
        }
      }
    }
    resolved.push_back(std::move(rp));
  }

  const int F = init.feature_dim();
  std::vector<FeatureVector> doc_feats, query_feats;
  doc_feats.reserve(corpus.size());
  for (const auto& doc : corpus) doc_feats.push_back(featurize(document_text(doc), F));
  query_feats.reserve(queries.size());
  for (const auto& q : queries) query_feats.push_back(featurize(q.text, F));

  TrainResult result;
  result.params = init;
  if (config.mode == TrainMode::FreeDsi) {
    FreeEmbeddingTable table;
    table.rows.resize(static_cast<Eigen::Index>(corpus.size()), init.output_dim());
    table.ids.reserve(corpus.size());
    for (const auto& doc : corpus) table.ids.push_back(doc.doc_id);
    std::mt19937_64 table_rng(splitmix64(config.seed));
    std::uniform_real_distribution<double> dist(-0.05, 0.05);
    for (Eigen::Index i = 0; i < table.rows.rows(); ++i)
      for (Eigen::Index j = 0; j < table.rows.cols(); ++j) table.rows(i, j) = dist(table_rng);
    result.table = std::move(table);
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, resolved.empty() ? 0 : resolved.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int step = 0; step < config.steps; ++step) {
    std::vector<int> chosen(config.batch_size);
    for (int i = 0; i < config.batch_size; ++i) chosen[i] = static_cast<int>(pick(rng));

    TrainBatch batch;
    for (int i = 0; i < config.batch_size; ++i) {
      const ResolvedPair& rp = resolved[chosen[i]];
      BatchItem item;
      item.positive = rp.positive;
      if (config.mode == TrainMode::FreeDsi) {
        bool indexing = unit(rng) < config.multitask_ratio;
        item.input_feat = indexing ? doc_feats[rp.positive] : query_feats[rp.query];
      } else {
        item.input_feat = query_feats[rp.query];
        // BM25 negatives first, then in-batch positives; dedup; own positive out.
        std::unordered_set<int> seen = {rp.positive};
        for (std::size_t n = 0; n < rp.bm25_negs.size(); ++n) {
          if (!seen.insert(rp.bm25_negs[n]).second) continue;
          item.negatives.push_back(rp.bm25_negs[n]);
          if (config.mode == TrainMode::TiedMarginMse)
            item.teacher_margins.push_back(rp.margins[n]);
        }
        if (config.mode == TrainMode::TiedContrastive) {
          for (int j = 0; j < config.batch_size; ++j) {
            if (j == i) continue;
            int other_pos = resolved[chosen[j]].positive;
            if (seen.insert(other_pos).second) item.negatives.push_back(other_pos);
          }
        }
      }
      batch.items.push_back(std::move(item));
    }

    Gradients g = compute_gradients(result.params,
                                    result.table ? &*result.table : nullptr, doc_feats, batch,
                                    config);
    result.params.weight -= config.learning_rate * g.dweight;
    result.params.bias -= config.learning_rate * g.dbias;
    if (result.table) result.table->rows -= config.learning_rate * g.dtable;
    result.loss_log.push_back(g.loss);
  }
  return result;
}

}  // namespace genrank
