#include "biomarkers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rng.hpp"

namespace brainshift {

ShiftStats extract_biomarkers(const VectorField &field,
                              const std::vector<double> &brain_mask,
                              const Spacing &spacing) {
  if (brain_mask.size() != field.count())
    throw DataError("extract_biomarkers: mask dims mismatch");
  ShiftStats s;
  std::size_t count = 0;
  for (std::size_t p = 0; p < field.count(); ++p) {
    if (brain_mask[p] <= 0.5)
      continue;
    const double mx = field.comp(0)[p] * spacing.sx;
    const double my = field.comp(1)[p] * spacing.sy;
    const double mz = field.comp(2)[p] * spacing.sz;
    const double mag = std::sqrt(mx * mx + my * my + mz * mz);
    s.max_mm = std::max(s.max_mm, mag);
    s.sum_mm += mag;
    ++count;
  }
  if (count == 0)
    throw DataError("extract_biomarkers: empty brain mask");
  s.mean_mm = s.sum_mm / static_cast<double>(count);
  return s;
}

double hematoma_volume(const std::vector<double> &mask,
                       const Spacing &spacing) {
  double sum = 0.0;
  for (double v : mask)
    sum += v;
  return sum * spacing.sx * spacing.sy * spacing.sz;
}

std::string laterality(const std::vector<double> &mask, const Dims &dims,
                       double threshold) {
  auto [l, r] = split_halves_raw(mask, dims);
  double sl = 0.0, sr = 0.0, total = 0.0;
  for (double v : l)
    sl += v;
  for (double v : r)
    sr += v;
  for (double v : mask)
    total += v;
  if (total <= 1e-12)
    throw DataError("laterality: empty hematoma mask");
  return (sl >= threshold * total && sr >= threshold * total) ? "bilateral"
                                                              : "unilateral";
}

double LogisticModel::score(const std::vector<double> &features) const {
  double z = intercept;
  for (std::size_t f = 0; f < weights.size(); ++f)
    z += weights[f] * (features[f] - mean[f]) / std_dev[f];
  return 1.0 / (1.0 + std::exp(-z));
}

namespace {

// Solve the small symmetric system A x = b in place (Gaussian elimination
// with partial pivoting; A is (d+1)x(d+1) at most 6x6 here).
std::vector<double> solve_dense(std::vector<std::vector<double>> A,
                                std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c]))
        piv = r;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    if (std::abs(A[c][c]) < 1e-300)
      throw DataError("logistic_fit: singular IRLS system");
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = A[r][c] / A[c][c];
      for (std::size_t cc = c; cc < n; ++cc)
        A[r][cc] -= f * A[c][cc];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t c = n; c-- > 0;) {
    double acc = b[c];
    for (std::size_t cc = c + 1; cc < n; ++cc)
      acc -= A[c][cc] * x[cc];
    x[c] = acc / A[c][c];
  }
  return x;
}

} // namespace

LogisticModel logistic_fit(const std::vector<std::vector<double>> &features,
                           const std::vector<int> &labels,
                           const std::vector<std::string> &feature_names) {
  const std::size_t n = features.size();
  if (n != labels.size() || n == 0)
    throw DataError("logistic_fit: bad inputs");
  const std::size_t d = feature_names.size();
  int pos = 0;
  for (int y : labels)
    pos += y;
  if (pos < 2 || static_cast<int>(n) - pos < 2)
    throw DataError("logistic_fit: need at least 2 records per class");

  LogisticModel m;
  m.feature_names = feature_names;
  m.mean.assign(d, 0.0);
  m.std_dev.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (features[i].size() != d)
      throw DataError("logistic_fit: ragged feature rows");
    for (std::size_t f = 0; f < d; ++f) {
      if (!std::isfinite(features[i][f]))
        throw DataError("logistic_fit: non-finite feature");
      m.mean[f] += features[i][f];
    }
  }
  for (auto &v : m.mean)
    v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < d; ++f) {
      const double c = features[i][f] - m.mean[f];
      m.std_dev[f] += c * c;
    }
  for (std::size_t f = 0; f < d; ++f) {
    m.std_dev[f] = std::sqrt(m.std_dev[f] / static_cast<double>(n));
    if (m.std_dev[f] <= 0.0)
      throw DataError("logistic_fit: zero-variance feature " +
                      feature_names[f]);
  }

  // standardized design matrix with intercept column last
  std::vector<std::vector<double>> X(n, std::vector<double>(d + 1, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < d; ++f)
      X[i][f] = (features[i][f] - m.mean[f]) / m.std_dev[f];

  const double l2 = 1e-4;
  std::vector<double> beta(d + 1, 0.0);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<std::vector<double>> H(d + 1, std::vector<double>(d + 1, 0.0));
    std::vector<double> g(d + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double z = 0.0;
      for (std::size_t f = 0; f <= d; ++f)
        z += beta[f] * X[i][f];
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double w = std::max(p * (1.0 - p), 1e-12);
      const double r = labels[i] - p;
      for (std::size_t f = 0; f <= d; ++f) {
        g[f] += X[i][f] * r;
        for (std::size_t f2 = 0; f2 <= d; ++f2)
          H[f][f2] += w * X[i][f] * X[i][f2];
      }
    }
    for (std::size_t f = 0; f < d; ++f) { // intercept unpenalized
      g[f] -= l2 * beta[f];
      H[f][f] += l2;
    }
    const std::vector<double> delta = solve_dense(H, g);
    double max_step = 0.0;
    for (std::size_t f = 0; f <= d; ++f) {
      beta[f] += delta[f];
      max_step = std::max(max_step, std::abs(delta[f]));
    }
    if (max_step < 1e-8)
      break;
  }
  m.weights.assign(beta.begin(), beta.begin() + d);
  m.intercept = beta[d];
  return m;
}

RocCurve roc_auc(const std::vector<double> &scores,
                 const std::vector<int> &labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw DataError("roc_auc: bad inputs");
  std::size_t pos = 0, neg = 0;
  for (int y : labels)
    (y ? pos : neg) += 1;
  if (pos == 0 || neg == 0)
    throw DataError("roc_auc: both classes required");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  RocCurve roc;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  double tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    // group tied scores into a single operating point
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]])
        ++tp;
      else
        ++fp;
      ++i;
    }
    roc.fpr.push_back(fp / static_cast<double>(neg));
    roc.tpr.push_back(tp / static_cast<double>(pos));
  }
  double auc = 0.0;
  for (std::size_t t = 1; t < roc.fpr.size(); ++t)
    auc += 0.5 * (roc.tpr[t] + roc.tpr[t - 1]) * (roc.fpr[t] - roc.fpr[t - 1]);
  roc.auc = auc;
  return roc;
}

std::vector<FeatureSet> default_feature_sets() {
  return {
      {"mls", {"mls_mm"}},
      {"volume", {"hematoma_volume_mm3"}},
      {"max_shift", {"max_shift_mm"}},
      {"mean_shift", {"mean_shift_mm"}},
      {"sum_shift", {"sum_shift_mm"}},
      {"conventional", {"mls_mm", "hematoma_volume_mm3"}},
      {"deformation", {"max_shift_mm", "mean_shift_mm", "sum_shift_mm"}},
      {"joint",
       {"mls_mm", "hematoma_volume_mm3", "max_shift_mm", "mean_shift_mm",
        "sum_shift_mm"}},
  };
}

namespace {

double record_feature(const BiomarkerRecord &r, const std::string &name) {
  if (name == "mls_mm")
    return r.mls_mm.value();
  if (name == "hematoma_volume_mm3")
    return r.hematoma_volume_mm3;
  if (name == "max_shift_mm")
    return r.max_shift_mm;
  if (name == "mean_shift_mm")
    return r.mean_shift_mm;
  if (name == "sum_shift_mm")
    return r.sum_shift_mm;
  throw UsageError("unknown biomarker feature: " + name);
}

bool needs_mls(const FeatureSet &set) {
  return std::find(set.features.begin(), set.features.end(), "mls_mm") !=
         set.features.end();
}

} // namespace

std::vector<CvResult> cross_validate(
    const std::vector<BiomarkerRecord> &records,
    const std::vector<FeatureSet> &sets, int k, std::uint64_t seed) {
  if (k < 2)
    throw UsageError("cross_validate: k must be >= 2");
  std::vector<CvResult> results;
  for (const auto &set : sets) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (!needs_mls(set) || records[i].mls_mm.has_value())
        eligible.push_back(i);

    // stratified fold assignment, deterministic per (seed, class order)
    Rng rng(seed);
    std::vector<std::size_t> pos, neg;
    for (std::size_t i : eligible)
      (records[i].surgery ? pos : neg).push_back(i);
    auto shuffle = [&rng](std::vector<std::size_t> &v) {
      for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.integer(i)]);
    };
    shuffle(pos);
    shuffle(neg);
    if (pos.size() < static_cast<std::size_t>(k) ||
        neg.size() < static_cast<std::size_t>(k))
      throw DataError("cross_validate: too few records per class for " +
                      std::to_string(k) + " stratified folds");
    std::vector<int> fold_of(records.size(), -1);
    for (std::size_t i = 0; i < pos.size(); ++i)
      fold_of[pos[i]] = static_cast<int>(i % k);
    for (std::size_t i = 0; i < neg.size(); ++i)
      fold_of[neg[i]] = static_cast<int>(i % k);

    CvResult res;
    res.feature_set = set.name;
    for (int fold = 0; fold < k; ++fold) {
      std::vector<std::vector<double>> train_x, test_x;
      std::vector<int> train_y, test_y;
      for (std::size_t i : eligible) {
        std::vector<double> row;
        row.reserve(set.features.size());
        for (const auto &f : set.features)
          row.push_back(record_feature(records[i], f));
        if (fold_of[i] == fold) {
          test_x.push_back(std::move(row));
          test_y.push_back(records[i].surgery ? 1 : 0);
        } else {
          train_x.push_back(std::move(row));
          train_y.push_back(records[i].surgery ? 1 : 0);
        }
      }
      const LogisticModel model = logistic_fit(train_x, train_y, set.features);
      std::vector<double> scores;
      scores.reserve(test_x.size());
      for (const auto &row : test_x)
        scores.push_back(model.score(row));
      res.fold_aucs.push_back(roc_auc(scores, test_y).auc);
    }
    res.mean_auc =
        std::accumulate(res.fold_aucs.begin(), res.fold_aucs.end(), 0.0) /
        static_cast<double>(k);
    results.push_back(std::move(res));
  }
  return results;
}

std::vector<BiomarkerRecord> read_biomarker_csv(const std::string &path) {
  std::ifstream f(path);
  if (!f)
    throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line))
    throw DataError("empty biomarker CSV: " + path);
  const std::string expected =
      "id,mls_mm,hematoma_volume_mm3,max_shift_mm,mean_shift_mm,sum_shift_mm,"
      "laterality,surgery";
  if (line != expected)
    throw DataError("unexpected biomarker CSV header in " + path);
  std::vector<BiomarkerRecord> records;
  while (std::getline(f, line)) {
    if (line.empty())
      continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    if (line.back() == ',')
      cells.push_back("");
    if (cells.size() != 8)
      throw DataError("bad biomarker CSV row: " + line);
    BiomarkerRecord r;
    r.id = cells[0];
    if (!cells[1].empty())
      r.mls_mm = std::stod(cells[1]);
    r.hematoma_volume_mm3 = std::stod(cells[2]);
    r.max_shift_mm = std::stod(cells[3]);
    r.mean_shift_mm = std::stod(cells[4]);
    r.sum_shift_mm = std::stod(cells[5]);
    r.laterality = cells[6];
    r.surgery = cells[7] == "1" || cells[7] == "true";
    records.push_back(std::move(r));
  }
  return records;
}

std::string biomarker_csv(const std::vector<BiomarkerRecord> &records) {
  std::ostringstream out;
  out << "id,mls_mm,hematoma_volume_mm3,max_shift_mm,mean_shift_mm,"
         "sum_shift_mm,laterality,surgery\n";
  out.precision(9);
  for (const auto &r : records) {
    out << r.id << ',';
    if (r.mls_mm)
      out << *r.mls_mm;
    out << ',' << r.hematoma_volume_mm3 << ',' << r.max_shift_mm << ','
        << r.mean_shift_mm << ',' << r.sum_shift_mm << ',' << r.laterality
        << ',' << (r.surgery ? 1 : 0) << '\n';
  }
  return out.str();
}

} // namespace brainshift
