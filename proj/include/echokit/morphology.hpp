#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "echokit/error.hpp"
#include "echokit/image.hpp"

namespace echokit {

/// Pixels of one connected component, as row-major indices.
struct Component {
    std::vector<std::size_t> pixels;
    bool touches_border = false;
};

/**
 * Connected components of the pixels for which `member(label)` holds.
 * connectivity is 4 or 8. Components are listed in order of their first
 * pixel in row-major scan.
 */
template <typename Predicate>
std::vector<Component> connected_components(const LabelMask& mask, int connectivity, Predicate member) {
    detail::require(connectivity == 4 || connectivity == 8, "connectivity must be 4 or 8");
    const int w = mask.width();
    const int h = mask.height();
    std::vector<char> seen(mask.size(), 0);
    std::vector<Component> out;
    std::vector<std::size_t> stack;
    auto labels = mask.values();
    for (std::size_t start = 0; start < labels.size(); ++start) {
        if (seen[start] || !member(labels[start])) continue;
        Component comp;
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            comp.pixels.push_back(idx);
            const int x = static_cast<int>(idx % static_cast<std::size_t>(w));
            const int y = static_cast<int>(idx / static_cast<std::size_t>(w));
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1) comp.touches_border = true;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if ((dx == 0 && dy == 0) || (connectivity == 4 && dx != 0 && dy != 0)) continue;
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const auto n = static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) +
                                   static_cast<std::size_t>(nx);
                    if (!seen[n] && member(labels[n])) {
                        seen[n] = 1;
                        stack.push_back(n);
                    }
                }
            }
        }
        out.push_back(std::move(comp));
    }
    return out;
}

/**
 * Clean up the `foreground` class of a segmentation.
 *
 * 1. 8-connected foreground components smaller than `min_area` take the most
 *    frequent label among their outside 8-neighbours (ties: smaller id).
 * 2. 4-connected regions of non-foreground pixels that do not reach the
 *    image border are holes and become foreground.
 */
inline LabelMask postprocess(const LabelMask& mask, int min_area, int foreground) {
    detail::require(min_area >= 0, "min_area must be >= 0");
    detail::require(foreground >= 0 && foreground < mask.class_count(),
                    "foreground class id is not present in the mask");
    LabelMask out = mask;
    const int w = mask.width();
    const int h = mask.height();
    auto is_fg = [foreground](int label) { return label == foreground; };

    std::vector<char> in_comp(mask.size(), 0);
    for (const auto& comp : connected_components(mask, 8, is_fg)) {
        if (comp.pixels.size() >= static_cast<std::size_t>(min_area)) continue;
        for (auto idx : comp.pixels) in_comp[idx] = 1;
        std::map<int, std::size_t> votes;
        for (auto idx : comp.pixels) {
            const int x = static_cast<int>(idx % static_cast<std::size_t>(w));
            const int y = static_cast<int>(idx / static_cast<std::size_t>(w));
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const auto n = static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) +
                                   static_cast<std::size_t>(nx);
                    if (!in_comp[n]) ++votes[mask(nx, ny)];
                }
            }
        }
        // A component filling the whole image has no outside neighbours; keep it.
        if (votes.empty()) {
            for (auto idx : comp.pixels) in_comp[idx] = 0;
            continue;
        }
        int replacement = votes.begin()->first;
        for (const auto& [label, count] : votes) {
            if (count > votes[replacement]) replacement = label;
        }
        for (auto idx : comp.pixels) {
            out.set(static_cast<int>(idx % static_cast<std::size_t>(w)),
                    static_cast<int>(idx / static_cast<std::size_t>(w)), replacement);
            in_comp[idx] = 0;
        }
    }

    for (const auto& region : connected_components(out, 4, [&](int label) { return !is_fg(label); })) {
        if (region.touches_border) continue;
        for (auto idx : region.pixels) {
            out.set(static_cast<int>(idx % static_cast<std::size_t>(w)),
                    static_cast<int>(idx / static_cast<std::size_t>(w)), foreground);
        }
    }
    return out;
}

}  // namespace echokit
