#include <stdio.h>
#include <stdlib.h>

#include "qwalk.h"

static int check(enum QwalkStatus s) {
    if (s != QWALK_STATUS_OK) {
        char msg[256];
        qwalk_last_error_message(msg, sizeof msg);
        fprintf(stderr, "qwalk error %d: %s\n", (int)s, msg);
        exit(1);
    }
    return 0;
}

int main(void) {
    QwalkParams *p = qwalk_params_new();
    check(qwalk_params_set(p, "g", 4.0));

    QwalkTrajectory *traj = NULL;
    check(qwalk_run(p, QWALK_MODEL_FULL_GPE, &traj));

    double dm = 0.0, stop = 0.0, survival = 0.0;
    check(qwalk_trajectory_summary(traj, &dm, &stop, &survival));

    size_t n = qwalk_trajectory_len(traj);
    double *rho00 = malloc(n * sizeof *rho00);
    check(qwalk_trajectory_copy(traj, QWALK_SERIES_FIELD_RHO00, rho00, n));

    double incoherent = 0.0;
    check(qwalk_incoherent_displacement(0.25, 0.5, &incoherent));

    printf("samples %zu\n", n);
    printf("rho00(0) %.6f\n", rho00[0]);
    printf("dm_final %.6f\n", dm);
    printf("incoherent %.6f\n", incoherent);

    if (qwalk_params_set(p, "gamma", -1.0) != QWALK_STATUS_INVALID_ARGUMENT) {
        return 2;
    }

    free(rho00);
    qwalk_trajectory_free(traj);
    qwalk_params_free(p);
    return 0;
}
