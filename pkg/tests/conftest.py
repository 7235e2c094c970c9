import numpy as np
import pytest

import saturate as st


@pytest.fixture(scope="session")
def lam36():
    return st.EdgePolynomial.regular(3)


@pytest.fixture(scope="session")
def rho36():
    return st.EdgePolynomial.regular(6)


@pytest.fixture(scope="session")
def sys36():
    """(3,6)-regular ensemble as the protograph [3 3]."""
    return st.regular_protograph(3, 6)


@pytest.fixture(scope="session")
def emac36(lam36, rho36):
    return st.make_emac(lam36, rho36, lam36, rho36)


@pytest.fixture(scope="session")
def sw_half(lam36, rho36):
    return st.make_slepian_wolf(
        st.SlepianWolfParams(lam36, rho36, lam36, rho36, gamma=0.5, p=0.5)
    )


@pytest.fixture(scope="session")
def sw_free(lam36, rho36):
    """gamma=0: two decoupled scalar BEC recursions."""
    return st.make_slepian_wolf(
        st.SlepianWolfParams(lam36, rho36, lam36, rho36, gamma=0.0, p=0.3)
    )


@pytest.fixture(scope="session")
def all_systems(sys36, emac36, sw_half):
    return [sys36, emac36, sw_half]


@pytest.fixture(scope="session")
def thresholds36(sys36):
    return {
        "bp": st.bp_threshold(sys36),
        "potential": st.potential_threshold(sys36),
    }
