#include <math.h>
#include <stdio.h>
#include "equator_forge.h"

#define CHECK(call)                                                             \
    do {                                                                        \
        EfStatus s_ = (call);                                                   \
        if (s_ != EF_STATUS_OK) {                                               \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, ef_last_error()); \
            return 1;                                                           \
        }                                                                       \
    } while (0)

int main(void) {
    EfTensor *r = NULL;
    EfMetric *g = NULL;
    CHECK(ef_tensor_round(3, &r));

    double x[4] = {1, 0, 0, 0}, y[4] = {0, 1, 0, 0}, k = 0;
    CHECK(ef_tensor_sectional(r, x, y, 4, &k));
    if (fabs(k - 1.0) > 1e-12) {
        fprintf(stderr, "sectional %g\n", k);
        return 1;
    }

    CHECK(ef_metric_from_tensor(r, &g));
    double p[4] = {0, 0, 0, 1}, v[4] = {1, 0, 0, 0}, gv = 0;
    CHECK(ef_metric_eval(g, p, v, v, 4, &gv));
    if (fabs(gv - 1.0) > 1e-9) {
        fprintf(stderr, "metric %g\n", gv);
        return 1;
    }

    EfTensor *bad = NULL;
    if (ef_tensor_round(0, &bad) == EF_STATUS_OK || ef_last_error() == NULL) {
        fprintf(stderr, "expected a failure for n = 0\n");
        return 1;
    }

    char *json = NULL;
    CHECK(ef_tensor_to_json(r, &json));
    ef_string_free(json);
    ef_metric_free(g);
    ef_tensor_free(r);
    printf("ok %s\n", ef_version());
    return 0;
}
