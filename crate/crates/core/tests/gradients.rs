mod common;

use common::{fd_gradient_error, grad_instance, gradient_errors};
use noisecascade::nn::{LinearClassifier, MlpClassifier};
use noisecascade::rng;

#[test]
fn random_heads_match_central_differences() {
    let (lin, mlp) = gradient_errors(20);
    assert!(lin < 1e-4, "linear rel err {lin:e}");
    assert!(mlp < 1e-4, "mlp rel err {mlp:e}");
}

#[test]
fn default_mlp_with_batchnorm_and_dropout() {
    let inst = grad_instance(3, 5, 4, 16);
    let m = MlpClassifier::with_hidden(5, 12, 4, 0.3, &mut rng::head_init(3, 0)).unwrap();
    assert!(fd_gradient_error(&m, &inst.x, &inst.y, &inst.w, inst.smoothing, 3) < 1e-4);
}

#[test]
fn zero_linear_head() {
    let inst = grad_instance(4, 3, 3, 5);
    let l = LinearClassifier::zeros(3, 3).unwrap();
    assert!(fd_gradient_error(&l, &inst.x, &inst.y, &inst.w, 0.0, 4) < 1e-4);
}
