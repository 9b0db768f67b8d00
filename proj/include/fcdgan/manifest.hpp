// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dataset manifest: a flat text file listing sample records with relative
// raster paths and optional supervision, plus band count and normalization
// scope. Schema (one token per field, '#' comments):
//
//   # fcdgan dataset manifest v1
//   bands 4
//   normalization per_image|global
//   stats <relpath>                      (optional; per-date global stats)
//   sample x=<p> y=<p> [ref=<p>] [region=<p>] [label=changed|unchanged]
//
// Stats file:
//   # fcdgan stats v1
//   x_mean v...   / x_std v...   / y_mean v...   / y_std v...

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fcdgan/normalize.hpp"

namespace fcdgan::data {

class ManifestError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ManifestSample {
    std::string x, y, ref, region;
    int label = -1;  // 1 changed, 0 unchanged, -1 absent
};

struct DatasetManifest {
    int bands = 0;
    NormScope scope = NormScope::kPerImage;
    std::string stats;  // optional, relative
    std::vector<ManifestSample> samples;
    std::filesystem::path root;  // directory of the manifest file

    std::string resolve(const std::string& rel) const { return (root / rel).string(); }

    bool all_have_labels() const {
        for (const auto& s : samples)
            if (s.label < 0) return false;
        return !samples.empty();
    }
    bool all_have_regions() const {
        for (const auto& s : samples)
            if (s.region.empty()) return false;
        return !samples.empty();
    }
    bool all_have_refs() const {
        for (const auto& s : samples)
            if (s.ref.empty()) return false;
        return !samples.empty();
    }
};

inline DatasetManifest read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ManifestError("cannot open manifest " + path);
    DatasetManifest m;
    m.root = std::filesystem::path(path).parent_path();
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream is(line);
        std::string head;
        if (!(is >> head)) continue;
        if (head == "bands") {
            if (!(is >> m.bands) || m.bands < 1) throw ManifestError(path + ": bad bands line " + std::to_string(lineno));
        } else if (head == "normalization") {
            std::string v;
            is >> v;
            if (v == "per_image")
                m.scope = NormScope::kPerImage;
            else if (v == "global")
                m.scope = NormScope::kGlobal;
            else
                throw ManifestError(path + ": unknown normalization '" + v + "'");
        } else if (head == "stats") {
            is >> m.stats;
        } else if (head == "sample") {
            ManifestSample s;
            std::string tok;
            while (is >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos)
                    throw ManifestError(path + ": bad sample token '" + tok + "' line " + std::to_string(lineno));
                const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
                if (key == "x")
                    s.x = val;
                else if (key == "y")
                    s.y = val;
                else if (key == "ref")
                    s.ref = val;
                else if (key == "region")
                    s.region = val;
                else if (key == "label") {
                    if (val == "changed")
                        s.label = 1;
                    else if (val == "unchanged")
                        s.label = 0;
                    else
                        throw ManifestError(path + ": unknown label '" + val + "'");
                } else {
                    throw ManifestError(path + ": unknown sample field '" + key + "'");
                }
            }
            if (s.x.empty() || s.y.empty())
                throw ManifestError(path + ": sample needs x= and y= (line " + std::to_string(lineno) + ")");
            m.samples.push_back(std::move(s));
        } else {
            throw ManifestError(path + ": unknown directive '" + head + "' line " + std::to_string(lineno));
        }
    }
    if (m.bands < 1) throw ManifestError(path + ": missing bands");
    return m;
}

inline void write_manifest(const std::string& path, const DatasetManifest& m) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ManifestError("cannot write manifest " + path);
    f << "# fcdgan dataset manifest v1\n";
    f << "bands " << m.bands << "\n";
    f << "normalization " << to_string(m.scope) << "\n";
    if (!m.stats.empty()) f << "stats " << m.stats << "\n";
    for (const auto& s : m.samples) {
        f << "sample x=" << s.x << " y=" << s.y;
        if (!s.ref.empty()) f << " ref=" << s.ref;
        if (!s.region.empty()) f << " region=" << s.region;
        if (s.label == 1) f << " label=changed";
        if (s.label == 0) f << " label=unchanged";
        f << "\n";
    }
}

struct GlobalStats {
    BandStats x, y;
};

inline void write_stats(const std::string& path, const GlobalStats& st) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ManifestError("cannot write stats " + path);
    f << "# fcdgan stats v1\n";
    f.precision(17);
    auto row = [&](const char* name, const std::vector<double>& v) {
        f << name;
        for (double x : v) f << " " << x;
        f << "\n";
    };
    row("x_mean", st.x.mean);
    row("x_std", st.x.stddev);
    row("y_mean", st.y.mean);
    row("y_std", st.y.stddev);
}

inline GlobalStats read_stats(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ManifestError("cannot open stats " + path);
    GlobalStats st;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line[0] == '#') continue;
        std::istringstream is(line);
        std::string head;
        if (!(is >> head)) continue;
        std::vector<double> vals;
        double v;
        while (is >> v) vals.push_back(v);
        if (head == "x_mean")
            st.x.mean = vals;
        else if (head == "x_std")
            st.x.stddev = vals;
        else if (head == "y_mean")
            st.y.mean = vals;
        else if (head == "y_std")
            st.y.stddev = vals;
        else
            throw ManifestError(path + ": unknown stats row '" + head + "'");
    }
    if (st.x.mean.empty() || st.x.mean.size() != st.x.stddev.size() || st.y.mean.size() != st.y.stddev.size())
        throw ManifestError(path + ": incomplete stats");
    return st;
}

}  // namespace fcdgan::data
