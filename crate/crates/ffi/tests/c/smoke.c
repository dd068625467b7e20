#include <math.h>
#include <stdio.h>
#include <string.h>

#include "linkgraph.h"

#define CHECK(call)                                                          \
    do {                                                                     \
        LgStatus s_ = (call);                                                \
        if (s_ != LG_STATUS_OK) {                                            \
            fprintf(stderr, "%s -> %d: %s\n", #call, s_, lg_last_error());   \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(int argc, char **argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: smoke <repository.json>\n");
        return 2;
    }
    LgRepository *repo = NULL;
    LgTaxonomy *tax = NULL;
    LgGraph *graph = NULL;
    LgMetrics m;
    size_t issues = 0, links = 0;

    CHECK(lg_repository_load(argv[1], &repo));
    CHECK(lg_repository_clean(repo));
    CHECK(lg_repository_counts(repo, &issues, &links));
    CHECK(lg_taxonomy_bundled(&tax));
    CHECK(lg_graph_build(repo, tax, "all", &graph));
    CHECK(lg_graph_metrics(graph, &m));

    char *canonical = NULL;
    CHECK(lg_taxonomy_normalize(tax, "Blocked By", &canonical));
    int ok = strcmp(canonical, "Blocks") == 0 && m.has_avg_density && !isnan(m.transitivity);
    printf("issues=%zu links=%zu transitivity=%.6f canonical=%s\n", issues, links, m.transitivity, canonical);
    lg_string_free(canonical);

    LgCategory cat;
    if (lg_taxonomy_categorize(tax, "no such type", &cat) != LG_STATUS_UNKNOWN_TYPE || lg_last_error() == NULL) {
        ok = 0;
    }

    lg_graph_free(graph);
    lg_taxonomy_free(tax);
    lg_repository_free(repo);
    return ok ? 0 : 1;
}
