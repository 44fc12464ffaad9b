#include "core/sfm.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "core/errors.hpp"

namespace svr {

namespace {

nlohmann::json parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("sfm: missing file " + path);
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("sfm: malformed json in " + path + ": " + e.what());
    }
}

}  // namespace

std::vector<Landmark> load_landmarks(const std::string& path) {
    const auto j = parse_file(path);
    std::vector<Landmark> out;
    out.reserve(j.size());
    for (const auto& item : j) {
        Landmark lm;
        lm.id = item.at("id").get<int>();
        const auto& xyz = item.at("xyz");
        lm.position = {xyz.at(0).get<double>(), xyz.at(1).get<double>(),
                       xyz.at(2).get<double>()};
        for (const auto& obs : item.at("obs")) {
            LandmarkObservation o;
            o.frame = obs.at("frame").get<int>();
            o.pixel = {obs.at("px").get<double>(), obs.at("py").get<double>()};
            lm.observations.push_back(o);
        }
        out.push_back(std::move(lm));
    }
    return out;
}

void save_landmarks(const std::vector<Landmark>& landmarks, const std::string& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& lm : landmarks) {
        nlohmann::json obs = nlohmann::json::array();
        for (const auto& o : lm.observations)
            obs.push_back({{"frame", o.frame}, {"px", o.pixel.x()}, {"py", o.pixel.y()}});
        j.push_back({{"id", lm.id},
                     {"xyz", {lm.position.x(), lm.position.y(), lm.position.z()}},
                     {"obs", std::move(obs)}});
    }
    std::ofstream os(path);
    if (!os) throw DataError("sfm: cannot write " + path);
    os << j.dump(1);
}

std::vector<CovisPair> load_covisibility(const std::string& path) {
    const auto j = parse_file(path);
    std::vector<CovisPair> out;
    out.reserve(j.size());
    for (const auto& item : j) {
        CovisPair p;
        p.i = item.at("i").get<int>();
        p.j = item.at("j").get<int>();
        p.count = item.at("count").get<int>();
        if (p.i > p.j) std::swap(p.i, p.j);
        out.push_back(p);
    }
    return out;
}

void save_covisibility(const std::vector<CovisPair>& pairs, const std::string& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& p : pairs) j.push_back({{"i", p.i}, {"j", p.j}, {"count", p.count}});
    std::ofstream os(path);
    if (!os) throw DataError("sfm: cannot write " + path);
    os << j.dump(1);
}

}  // namespace svr
