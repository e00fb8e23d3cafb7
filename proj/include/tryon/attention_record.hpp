#pragma once

#include <Eigen/Dense>

#include <vector>

namespace tryon {

// Head-averaged cross-attention score map captured at one block during a
// forward pass. scores is (h*w) x n, row-stochastic: row (i) holds the
// attention mass pixel i places on each garment token.
struct AttentionMapEntry {
    int block_id = 0;
    int h = 0, w = 0;
    Eigen::MatrixXd scores;
};

using AttentionRecord = std::vector<AttentionMapEntry>;

}  // namespace tryon
