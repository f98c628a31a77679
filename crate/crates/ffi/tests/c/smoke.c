#include <stdio.h>
#include <string.h>
#include "factorlat.h"

int main(void) {
    FlClassGroup *cg = NULL;
    if (fl_class_group_new(-87, &cg) != FL_STATUS_OK) return 1;
    uint64_t h = 0, eta = 0;
    uint64_t inv[4];
    size_t len = 0;
    if (fl_class_group_order(cg, &h) != FL_STATUS_OK) return 2;
    if (fl_class_group_invariants(cg, inv, 4, &len) != FL_STATUS_OK) return 3;
    if (fl_eta(cg, 14145, 0, &eta) != FL_STATUS_OK) return 4;
    char *json = NULL;
    if (fl_factorize_json(cg, 14145, true, 0, &json) != FL_STATUS_OK) return 5;
    int has_mode = strstr(json, "\"mode\":\"explicit\"") != NULL;
    fl_string_free(json);
    fl_class_group_free(cg);
    if (fl_class_group_new(-12, &cg) != FL_STATUS_INVALID_DISCRIMINANT) return 6;
    printf("h=%llu rank=%zu inv0=%llu eta=%llu explicit=%d err=%s\n", (unsigned long long)h, len,
           (unsigned long long)inv[0], (unsigned long long)eta, has_mode, fl_last_error_message());
    return 0;
}
