#include "mudseg/forest.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "mudseg/image_io.hpp"
#include "mudseg/parallel.hpp"
#include "mudseg/rng.hpp"

namespace mudseg {

void TrainingSet::add_row(std::span<const float> values, ClassCode label, std::uint32_t source, std::uint64_t pixel) {
    if (values.size() != channel_count()) throw InvalidArgument("training row has wrong channel count");
    features.insert(features.end(), values.begin(), values.end());
    labels.push_back(static_cast<std::uint8_t>(label));
    provenance.push_back({source, pixel});
}

TrainingSet sample_training(const std::vector<LabeledImage>& images, int per_class, std::uint64_t seed) {
    if (per_class < 1) throw InvalidArgument("sample_training: per-class quota must be >= 1");
    TrainingSet ts;
    ts.channel_names = default_feature_names();
    Xoshiro256 rng(seed);
    std::array<std::size_t, kNumClasses> seen{};
    std::vector<float> row(ts.channel_count());

    for (std::size_t img_idx = 0; img_idx < images.size(); ++img_idx) {
        const auto& li = images[img_idx];
        if (!li.image.same_shape(li.mask)) {
            throw InvalidArgument("sample_training: " + li.source_id + " image and mask dimensions differ");
        }
        ts.source_ids.push_back(li.source_id);
        std::array<std::vector<std::uint64_t>, kNumClasses> chosen;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            std::vector<std::uint64_t> candidates;
            for (std::size_t i = 0; i < li.mask.size(); ++i) {
                if (li.mask.samples()[i] == c) candidates.push_back(i);
            }
            const std::size_t k = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(per_class));
            for (std::size_t j = 0; j < k; ++j) {
                const auto pick = j + rng.below(candidates.size() - j);
                std::swap(candidates[j], candidates[pick]);
            }
            candidates.resize(k);
            std::sort(candidates.begin(), candidates.end());
            chosen[c] = std::move(candidates);
            seen[c] += k;
        }
        if (chosen[0].empty() && chosen[1].empty() && chosen[2].empty()) continue;

        const FeatureStack stack = extract_features(li.image);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            for (auto px : chosen[c]) {
                for (std::size_t ch = 0; ch < stack.channel_count(); ++ch) row[ch] = stack.channels[ch][px];
                ts.add_row(row, static_cast<ClassCode>(c), static_cast<std::uint32_t>(img_idx), px);
            }
        }
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (seen[c] == 0) {
            throw InvalidArgument(std::string("sample_training: class ") + class_name(static_cast<ClassCode>(c)) +
                                  " is absent from every image");
        }
    }
    return ts;
}

namespace {

using Counts = std::array<std::uint32_t, kNumClasses>;

double gini(const Counts& c, double n) {
    if (n <= 0) return 0.0;
    double s = 0.0;
    for (auto v : c) {
        const double p = v / n;
        s += p * p;
    }
    return 1.0 - s;
}

struct Sorted {
    float value;
    std::uint8_t label;
};

class TreeBuilder {
public:
    TreeBuilder(const std::vector<float>& features, const std::vector<std::uint8_t>& labels, std::size_t channels,
                int mtry, Xoshiro256& rng)
        : features_(features), labels_(labels), channels_(channels), mtry_(mtry), rng_(rng) {}

    Tree build(std::vector<std::uint32_t> rows) {
        rows_ = std::move(rows);
        tree_.nodes.clear();
        grow(0, rows_.size());
        return std::move(tree_);
    }

private:
    int grow(std::size_t begin, std::size_t end) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        Counts counts{};
        for (std::size_t i = begin; i < end; ++i) ++counts[labels_[rows_[i]]];
        const double n = static_cast<double>(end - begin);
        const double parent = gini(counts, n);

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_impurity = parent;
        if (parent > 0.0) {
            // Partial Fisher-Yates over the channel indices.
            std::vector<int> order(channels_);
            std::iota(order.begin(), order.end(), 0);
            for (int j = 0; j < mtry_; ++j) {
                const auto pick = static_cast<std::size_t>(j) + rng_.below(channels_ - static_cast<std::size_t>(j));
                std::swap(order[static_cast<std::size_t>(j)], order[pick]);
                const int f = order[static_cast<std::size_t>(j)];
                consider(f, begin, end, counts, best_feature, best_threshold, best_impurity);
            }
        }
        if (best_feature < 0 || !(best_impurity < parent - 1e-12)) {
            tree_.nodes[static_cast<std::size_t>(id)].counts = counts;
            return id;
        }

        auto mid = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                  rows_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::uint32_t r) {
                                      return static_cast<double>(value(r, best_feature)) <= best_threshold;
                                  });
        const auto split = static_cast<std::size_t>(mid - rows_.begin());
        const int left = grow(begin, split);
        const int right = grow(split, end);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left;
        node.right = right;
        return id;
    }

    void consider(int f, std::size_t begin, std::size_t end, const Counts& total, int& best_feature,
                  double& best_threshold, double& best_impurity) {
        scratch_.clear();
        for (std::size_t i = begin; i < end; ++i) scratch_.push_back({value(rows_[i], f), labels_[rows_[i]]});
        std::sort(scratch_.begin(), scratch_.end(), [](const Sorted& a, const Sorted& b) {
            return a.value != b.value ? a.value < b.value : a.label < b.label;
        });
        const double n = static_cast<double>(scratch_.size());
        Counts left{};
        for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
            ++left[scratch_[i].label];
            if (scratch_[i].value == scratch_[i + 1].value) continue;
            Counts right{};
            for (std::size_t c = 0; c < kNumClasses; ++c) right[c] = total[c] - left[c];
            const double nl = static_cast<double>(i + 1);
            const double nr = n - nl;
            const double impurity = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
            if (impurity < best_impurity - 1e-15 || (best_feature < 0 && impurity < best_impurity)) {
                best_impurity = impurity;
                best_feature = f;
                best_threshold = (static_cast<double>(scratch_[i].value) + static_cast<double>(scratch_[i + 1].value)) / 2.0;
            }
        }
    }

    [[nodiscard]] float value(std::uint32_t row, int f) const {
        return features_[static_cast<std::size_t>(row) * channels_ + static_cast<std::size_t>(f)];
    }

    const std::vector<float>& features_;
    const std::vector<std::uint8_t>& labels_;
    std::size_t channels_;
    int mtry_;
    Xoshiro256& rng_;
    std::vector<std::uint32_t> rows_;
    std::vector<Sorted> scratch_;
    Tree tree_;
};

int leaf_vote(const TreeNode& leaf) {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c) {
        if (leaf.counts[static_cast<std::size_t>(c)] > leaf.counts[static_cast<std::size_t>(best)]) best = c;
    }
    return best;
}

const TreeNode& find_leaf(const Tree& tree, std::span<const float> x) {
    const TreeNode* node = &tree.nodes[0];
    while (!node->is_leaf()) {
        const bool go_left = static_cast<double>(x[static_cast<std::size_t>(node->feature)]) <= node->threshold;
        node = &tree.nodes[static_cast<std::size_t>(go_left ? node->left : node->right)];
    }
    return *node;
}

int majority(const std::array<int, kNumClasses>& votes) {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c) {
        if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    }
    return best;
}

}  // namespace

Forest train_forest(const TrainingSet& ts, const ForestParams& params, int jobs, double* oob_error) {
    const std::size_t N = ts.rows();
    const std::size_t C = ts.channel_count();
    if (N == 0) throw InvalidArgument("train_forest: empty training set");
    if (params.n_trees < 1) throw InvalidArgument("train_forest: n_trees must be >= 1");
    if (params.mtry < 1 || static_cast<std::size_t>(params.mtry) > C) {
        throw InvalidArgument("train_forest: mtry must be in [1, " + std::to_string(C) + "]");
    }

    // Canonical row order: (label, source id, pixel).
    std::vector<std::uint32_t> canon(N);
    std::iota(canon.begin(), canon.end(), 0u);
    std::sort(canon.begin(), canon.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (ts.labels[a] != ts.labels[b]) return ts.labels[a] < ts.labels[b];
        const auto& sa = ts.source_ids.empty() ? std::string() : ts.source_ids[ts.provenance[a].source];
        const auto& sb = ts.source_ids.empty() ? std::string() : ts.source_ids[ts.provenance[b].source];
        if (sa != sb) return sa < sb;
        if (ts.provenance[a].pixel != ts.provenance[b].pixel) return ts.provenance[a].pixel < ts.provenance[b].pixel;
        return a < b;
    });
    std::vector<float> features(N * C);
    std::vector<std::uint8_t> labels(N);
    for (std::size_t i = 0; i < N; ++i) {
        const auto r = ts.row(canon[i]);
        std::copy(r.begin(), r.end(), features.begin() + static_cast<std::ptrdiff_t>(i * C));
        labels[i] = ts.labels[canon[i]];
    }

    Forest forest;
    forest.n_trees = params.n_trees;
    forest.mtry = params.mtry;
    forest.seed = params.seed;
    forest.channels = ts.channel_names;
    forest.trees.resize(static_cast<std::size_t>(params.n_trees));
    std::vector<std::vector<std::uint8_t>> in_bag(oob_error ? static_cast<std::size_t>(params.n_trees) : 0);

    parallel_for(static_cast<std::size_t>(params.n_trees), jobs, [&](std::size_t t) {
        Xoshiro256 rng(params.seed ^ static_cast<std::uint64_t>(t));
        std::vector<std::uint32_t> sample(N);
        for (auto& s : sample) s = static_cast<std::uint32_t>(rng.below(N));
        if (oob_error) {
            in_bag[t].assign(N, 0);
            for (auto s : sample) in_bag[t][s] = 1;
        }
        TreeBuilder builder(features, labels, C, params.mtry, rng);
        forest.trees[t] = builder.build(std::move(sample));
    });

    if (oob_error) {
        std::size_t evaluated = 0;
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < N; ++i) {
            std::array<int, kNumClasses> votes{};
            bool any = false;
            const std::span<const float> x(features.data() + i * C, C);
            for (std::size_t t = 0; t < forest.trees.size(); ++t) {
                if (in_bag[t][i]) continue;
                ++votes[static_cast<std::size_t>(leaf_vote(find_leaf(forest.trees[t], x)))];
                any = true;
            }
            if (!any) continue;
            ++evaluated;
            if (majority(votes) != labels[i]) ++wrong;
        }
        *oob_error = evaluated ? static_cast<double>(wrong) / static_cast<double>(evaluated) : 0.0;
    }
    return forest;
}

ClassCode predict_row(const Forest& forest, std::span<const float> features) {
    if (features.size() != forest.channels.size()) throw InvalidArgument("predict: feature vector length mismatch");
    std::array<int, kNumClasses> votes{};
    for (const auto& tree : forest.trees) ++votes[static_cast<std::size_t>(leaf_vote(find_leaf(tree, features)))];
    return static_cast<ClassCode>(majority(votes));
}

ClassMask predict(const Forest& forest, const FeatureStack& stack, int jobs) {
    if (stack.names != forest.channels) throw InvalidArgument("predict: feature channels do not match the forest");
    if (forest.trees.empty()) throw InvalidArgument("predict: forest has no trees");
    ClassMask out(stack.width, stack.height);
    const std::size_t C = stack.channel_count();
    parallel_for(static_cast<std::size_t>(stack.height), jobs, [&](std::size_t y) {
        std::vector<float> x(C);
        for (int col = 0; col < stack.width; ++col) {
            const std::size_t px = y * static_cast<std::size_t>(stack.width) + static_cast<std::size_t>(col);
            for (std::size_t c = 0; c < C; ++c) x[c] = stack.channels[c][px];
            out.samples()[px] = static_cast<std::uint8_t>(predict_row(forest, x));
        }
    });
    return out;
}

std::string forest_to_json(const Forest& forest) {
    nlohmann::ordered_json j;
    j["version"] = kForestFormatVersion;
    j["n_trees"] = forest.n_trees;
    j["mtry"] = forest.mtry;
    j["seed"] = forest.seed;
    j["channels"] = forest.channels;
    j["trees"] = nlohmann::ordered_json::array();
    for (const auto& tree : forest.trees) {
        nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
        for (const auto& n : tree.nodes) {
            nlohmann::ordered_json jn;
            if (n.is_leaf()) {
                jn["counts"] = n.counts;
            } else {
                jn["feature"] = n.feature;
                jn["threshold"] = n.threshold;
                jn["left"] = n.left;
                jn["right"] = n.right;
            }
            nodes.push_back(std::move(jn));
        }
        j["trees"].push_back({{"nodes", std::move(nodes)}});
    }
    return j.dump() + "\n";
}

Forest forest_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("forest: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("version")) throw FormatError("forest: missing version field");
    if (!j["version"].is_number_integer() || j["version"].get<int>() != kForestFormatVersion) {
        throw FormatError("forest: unsupported version " + j["version"].dump());
    }
    Forest f;
    try {
        f.n_trees = j.at("n_trees").get<int>();
        f.mtry = j.at("mtry").get<int>();
        f.seed = j.at("seed").get<std::uint64_t>();
        f.channels = j.at("channels").get<std::vector<std::string>>();
        for (const auto& jt : j.at("trees")) {
            Tree tree;
            const auto& nodes = jt.at("nodes");
            const int count = static_cast<int>(nodes.size());
            if (count == 0) throw FormatError("forest: tree without nodes");
            for (int i = 0; i < count; ++i) {
                const auto& jn = nodes[static_cast<std::size_t>(i)];
                TreeNode n;
                if (jn.contains("counts")) {
                    const auto counts = jn.at("counts").get<std::vector<long long>>();
                    if (counts.size() != kNumClasses) throw FormatError("forest: leaf histogram must have 3 entries");
                    long long sum = 0;
                    for (std::size_t c = 0; c < kNumClasses; ++c) {
                        if (counts[c] < 0 || counts[c] > 0xffffffffLL) throw FormatError("forest: bad leaf count");
                        n.counts[c] = static_cast<std::uint32_t>(counts[c]);
                        sum += counts[c];
                    }
                    if (sum == 0) throw FormatError("forest: empty leaf histogram at node " + std::to_string(i));
                } else {
                    n.feature = jn.at("feature").get<int>();
                    n.threshold = jn.at("threshold").get<double>();
                    n.left = jn.at("left").get<int>();
                    n.right = jn.at("right").get<int>();
                    if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= f.channels.size()) {
                        throw FormatError("forest: feature index out of range at node " + std::to_string(i));
                    }
                    // Children must come later so traversal always terminates.
                    if (n.left <= i || n.right <= i || n.left >= count || n.right >= count) {
                        throw FormatError("forest: malformed child link at node " + std::to_string(i));
                    }
                }
                tree.nodes.push_back(n);
            }
            f.trees.push_back(std::move(tree));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("forest: malformed node data: ") + e.what());
    }
    if (static_cast<int>(f.trees.size()) != f.n_trees) throw FormatError("forest: n_trees does not match tree list");
    return f;
}

void save_forest(const Forest& forest, const std::filesystem::path& path) { write_text(path, forest_to_json(forest)); }

Forest load_forest(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return forest_from_json(std::string(bytes.begin(), bytes.end()));
}

}  // namespace mudseg
