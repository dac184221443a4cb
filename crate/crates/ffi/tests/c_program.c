#include <stdio.h>
#include <math.h>
#include "tailpoint.h"

int main(void) {
    TpDistribution *d = NULL;
    if (tp_distribution_new("gaussian(mu=0,sigma=1)", &d) != TP_STATUS_OK) return 1;
    TpReport *r = NULL;
    if (tp_report_new(d, &r) != TP_STATUS_OK) return 2;
    double x = 0, cdf = 0;
    if (tp_report_point(r, TP_SIDE_RIGHT, TP_POINT_PMCONV, &x, &cdf) != TP_STATUS_OK) return 3;
    if (fabs(x - sqrt(3.0)) > 1e-9) return 4;
    printf("%.6f %.4f\n", x, cdf);

    TpDistribution *bad = NULL;
    if (tp_distribution_new("gaussian(sigma=0)", &bad) != TP_STATUS_INVALID_ARGUMENT) return 5;
    char *msg = tp_last_error_message();
    if (msg == NULL) return 6;
    tp_string_free(msg);

    tp_report_free(r);
    tp_distribution_free(d);
    return 0;
}
