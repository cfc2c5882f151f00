#include "teraliz/reduce.hpp"

#include <algorithm>
#include <set>

namespace teraliz::reduce {

namespace {

using KillSet = std::set<size_t>;

KillSet column_kills(const mutate::KillMatrix& m, size_t col) {
    KillSet s;
    for (size_t mi = 0; mi < m.cells.size(); ++mi)
        if (mutate::cell_kills(m.cells[mi][col])) s.insert(mi);
    return s;
}

bool subset_of(const KillSet& a, const KillSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

void merge_into(KillSet& into, const KillSet& from) { into.insert(from.begin(), from.end()); }

}  // namespace

ReductionDecision reduce_suite(const mutate::KillMatrix& original, const mutate::KillMatrix& variant,
                         const std::vector<GenRecord>& records,
                         const std::map<std::string, size_t>& assertions_per_test) {
    if (original.mutant_ids != variant.mutant_ids)
        throw MatrixMismatchError("kill matrices enumerate different mutants");
    const size_t n_mut = original.mutant_ids.size();

    std::map<std::string, size_t> var_col;
    for (size_t c = 0; c < variant.test_names.size(); ++c) var_col[variant.test_names[c]] = c;
    for (const std::string& name : original.test_names)
        if (!var_col.count(name))
            throw MatrixMismatchError("variant matrix lacks original test '" + name + "'");

    std::map<std::string, const GenRecord*> record_of;
    for (const GenRecord& r : records) record_of[r.gt_id] = &r;

    // Columns beyond the original suite are generalized tests; order them by
    // the assertion they came from.
    struct GtCol {
        size_t col = 0;
        const GenRecord* rec = nullptr;
    };
    std::vector<GtCol> gts;
    std::set<std::string> orig_names(original.test_names.begin(), original.test_names.end());
    for (size_t c = 0; c < variant.test_names.size(); ++c) {
        const std::string& name = variant.test_names[c];
        if (orig_names.count(name)) continue;
        auto it = record_of.find(name);
        if (it == record_of.end())
            throw MatrixMismatchError("variant column '" + name + "' has no generalization record");
        gts.push_back({c, it->second});
    }
    std::stable_sort(gts.begin(), gts.end(), [](const GtCol& a, const GtCol& b) {
        if (a.rec->test_name != b.rec->test_name) return a.rec->test_name < b.rec->test_name;
        if (a.rec->assertion_index != b.rec->assertion_index)
            return a.rec->assertion_index < b.rec->assertion_index;
        return a.rec->gt_id < b.rec->gt_id;
    });

    KillSet orig_killed;
    for (size_t c = 0; c < original.test_names.size(); ++c)
        merge_into(orig_killed, column_kills(original, c));

    // Retention: fresh kills against the whole original suite...
    struct Candidate {
        const GtCol* gc = nullptr;
        KillSet fresh;
        bool kept = true;
    };
    std::vector<Candidate> cands;
    for (const GtCol& gc : gts) {
        KillSet kills = column_kills(variant, gc.col);
        Candidate c;
        c.gc = &gc;
        for (size_t mi : kills)
            if (!orig_killed.count(mi)) c.fresh.insert(mi);
        if (!c.fresh.empty()) cands.push_back(std::move(c));
    }
    // ...and at least one of them unique among what stays retained. Each
    // check runs against the current set, which only shrinks afterwards, so
    // one backward pass settles it while favoring earlier assertions.
    for (size_t i = cands.size(); i-- > 0;) {
        KillSet others;
        for (size_t j = 0; j < cands.size(); ++j)
            if (j != i && cands[j].kept) merge_into(others, cands[j].fresh);
        if (subset_of(cands[i].fresh, others)) cands[i].kept = false;
    }
    cands.erase(std::remove_if(cands.begin(), cands.end(),
                               [](const Candidate& c) { return !c.kept; }),
                cands.end());

    // Removal: every assertion generalized green, and the rest of the final
    // suite already kills everything this original kills.
    std::map<std::string, std::set<int>> green_assertions;
    for (const GenRecord& r : records)
        if (r.passed) green_assertions[r.test_name].insert(r.assertion_index);

    std::vector<std::string> final_originals(original.test_names.begin(),
                                             original.test_names.end());
    ReductionDecision out;
    for (const std::string& name : original.test_names) {
        auto want = assertions_per_test.find(name);
        if (want == assertions_per_test.end()) continue;
        const std::set<int>& have = green_assertions[name];
        bool all_green = true;
        for (size_t i = 0; i < want->second; ++i)
            if (!have.count(static_cast<int>(i))) {
                all_green = false;
                break;
            }
        if (!all_green) continue;

        KillSet mine = column_kills(variant, var_col.at(name));
        KillSet rest;
        for (const std::string& other : final_originals)
            if (other != name) merge_into(rest, column_kills(variant, var_col.at(other)));
        for (const Candidate& c : cands) merge_into(rest, column_kills(variant, c.gc->col));
        if (!subset_of(mine, rest)) continue;

        final_originals.erase(std::find(final_originals.begin(), final_originals.end(), name));
        out.originals_removed.push_back(name);
    }

    KillSet final_killed;
    for (const std::string& name : final_originals)
        merge_into(final_killed, column_kills(variant, var_col.at(name)));
    out.final_suite = std::move(final_originals);
    KillSet all_fresh;
    for (const Candidate& c : cands) {
        RetainedTest rt;
        rt.gt_id = c.gc->rec->gt_id;
        for (size_t mi : c.fresh) rt.new_kills.push_back(variant.mutant_ids[mi]);
        merge_into(all_fresh, c.fresh);
        merge_into(final_killed, column_kills(variant, c.gc->col));
        out.final_suite.push_back(rt.gt_id);
        out.retained.push_back(std::move(rt));
    }
    for (size_t mi : all_fresh) out.new_kills.push_back(variant.mutant_ids[mi]);

    out.score_before =
        n_mut == 0 ? 1.0 : static_cast<double>(orig_killed.size()) / static_cast<double>(n_mut);
    out.score_after =
        n_mut == 0 ? 1.0 : static_cast<double>(final_killed.size()) / static_cast<double>(n_mut);
    return out;
}

}  // namespace teraliz::reduce
