#include <math.h>
#include <stdio.h>
#include "regcoh.h"

int main(void) {
    RegcohState *psi = NULL;
    if (regcoh_free_coherent(REGCOH_SCHEME_GAUSSIAN, 1.0, 10.0, 1.0, 1.0, 0.5, 0.3, 0.0, &psi) != REGCOH_STATUS_OK) {
        return 1;
    }
    double n = 0.0;
    if (regcoh_state_norm(psi, 1e-10, &n) != REGCOH_STATUS_OK || fabs(n - 1.0) > 1e-8) {
        return 2;
    }
    regcoh_state_free(psi);

    RegcohState *bad = NULL;
    if (regcoh_free_fiducial(REGCOH_SCHEME_WINDOW, 2.0, 1.0, &bad) != REGCOH_STATUS_INVALID_PARAMETER || bad != NULL) {
        return 3;
    }
    char msg[256];
    if (regcoh_last_error(msg, sizeof msg) == 0) {
        return 4;
    }
    printf("norm=%.12f last_error=%s\n", n, msg);
    return 0;
}
