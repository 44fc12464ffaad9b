#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace svr {

struct LandmarkObservation {
    int frame = 0;
    Eigen::Vector2d pixel{0.0, 0.0};
};

struct Landmark {
    int id = 0;
    Eigen::Vector3d position{0.0, 0.0, 0.0};
    std::vector<LandmarkObservation> observations;  // >= 2 per landmark
};

struct CovisPair {
    int i = 0, j = 0;  // unordered, stored with i < j
    int count = 0;     // shared landmarks
};

// sfm/points.json: [{id, xyz:[x,y,z], obs:[{frame, px, py}]}]
std::vector<Landmark> load_landmarks(const std::string& path);
void save_landmarks(const std::vector<Landmark>& landmarks, const std::string& path);

// sfm/covis.json: [{i, j, count}]
std::vector<CovisPair> load_covisibility(const std::string& path);
void save_covisibility(const std::vector<CovisPair>& pairs, const std::string& path);

}  // namespace svr
