#pragma once

// Synthetic planted-signal datasets shared by probing/geometry tests and
// the acceptance suite.

#include <vector>

#include "emolab/rng.hpp"
#include "emolab/util.hpp"

namespace test_support {

struct PlantedData {
    emolab::Mat x;
    std::vector<int> y;
    emolab::Mat class_means;  // for centroid oracles
};

// k classes, n_per samples each, dim features; class means are random
// unit-ish directions scaled to `separation` times the noise sigma.
inline PlantedData planted_classes(int k, int n_per, int dim, double separation, double noise_sigma,
                                   std::uint64_t seed) {
    emolab::Rng rng(seed);
    PlantedData d;
    d.class_means = emolab::Mat(static_cast<std::size_t>(k), static_cast<std::size_t>(dim));
    for (int c = 0; c < k; ++c)
        for (int j = 0; j < dim; ++j)
            d.class_means.at(static_cast<std::size_t>(c), static_cast<std::size_t>(j)) =
                separation * noise_sigma * rng.gaussian();
    d.x = emolab::Mat(static_cast<std::size_t>(k * n_per), static_cast<std::size_t>(dim));
    for (int c = 0; c < k; ++c)
        for (int i = 0; i < n_per; ++i) {
            const std::size_t row = static_cast<std::size_t>(c * n_per + i);
            d.y.push_back(c);
            for (int j = 0; j < dim; ++j)
                d.x.at(row, static_cast<std::size_t>(j)) =
                    d.class_means.at(static_cast<std::size_t>(c), static_cast<std::size_t>(j)) +
                    noise_sigma * rng.gaussian();
        }
    return d;
}

// nearest-centroid scores with the same CV folds: score of class c is
// negative distance to the training-fold centroid
inline emolab::Mat centroid_cv_scores(const PlantedData& d, const std::vector<int>& fold_of, int folds) {
    const int k = 1 + *std::max_element(d.y.begin(), d.y.end());
    emolab::Mat scores(d.x.rows, static_cast<std::size_t>(k));
    for (int f = 0; f < folds; ++f) {
        emolab::Mat centroids(static_cast<std::size_t>(k), d.x.cols);
        std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
        for (std::size_t i = 0; i < d.x.rows; ++i) {
            if (fold_of[i] == f) continue;
            counts[static_cast<std::size_t>(d.y[i])] += 1.0;
            for (std::size_t j = 0; j < d.x.cols; ++j)
                centroids.at(static_cast<std::size_t>(d.y[i]), j) += d.x.at(i, j);
        }
        for (int c = 0; c < k; ++c)
            for (std::size_t j = 0; j < d.x.cols; ++j)
                centroids.at(static_cast<std::size_t>(c), j) /= counts[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < d.x.rows; ++i) {
            if (fold_of[i] != f) continue;
            for (int c = 0; c < k; ++c) {
                double dist = 0.0;
                for (std::size_t j = 0; j < d.x.cols; ++j) {
                    const double diff = d.x.at(i, j) - centroids.at(static_cast<std::size_t>(c), j);
                    dist += diff * diff;
                }
                scores.at(i, static_cast<std::size_t>(c)) = -dist;
            }
        }
    }
    return scores;
}

}  // namespace test_support
