//! The departure-flight sample ontology with its hand-derived closure.

/// The sample TBox plus the `Departure ⊑ Dep` bridge.
pub const DELAY_TBOX: &str = "\
SubClassOf(And(Dep Some(hasDelMin Nom(Pos))) DelayedDep)
SubClassOf(And(Dep Some(hasDelMin Nom(Neg))) OnTimeDep)
RoleChain(hasCarrier hasCarHub hasDepHub)
RoleChain(hasNebApt hasRecDep hasRecNebDep)
SubClassOf(And(Dep Some(hasOri Nom(CA)) Some(hasDes Nom(CA))) Some(withIn Nom(CA)))
SubClassOf(Some(withIn Top) InStateDep)
SubClassOf(Departure Dep)
";

/// One departure with its carrier, airports, weather and delay.
pub const DELAY_ABOX: &str = "\
ClassAssert(Airport LAX)
RoleAssert(locatedIn LAX CA)
ClassAssert(Carrier DL)
ClassAssert(Departure d)
RoleAssert(hasDelMin d Pos)
RoleAssert(hasWea d wea)
RoleAssert(hasOri d LAX)
RoleAssert(hasCarrier d DL)
ClassAssert(Airport JFK)
RoleAssert(hasDes d JFK)
SameInd(LAX ori)
SameInd(DL car)
RoleAssert(hasRecDep d d1)
RoleAssert(hasCarrier d1 MU)
RoleAssert(hasRecDep d d2)
RoleAssert(hasCarrier d2 AA)
ClassAssert(DelayedDep d)
ClassAssert(HeavySnow wea)
";

/// Derived by hand: the asserted atoms with `ori` and `car` merged into
/// `LAX` and `DL`, plus `Dep(d)` from the bridge. `DelayedDep(d)` also
/// follows from axiom (1). Nothing else fires: no carrier hub is known, and
/// LAX is not CA.
pub const DELAY_CLOSURE: &[&str] = &[
    "Airport(JFK)",
    "Airport(LAX)",
    "Carrier(DL)",
    "DelayedDep(d)",
    "Dep(d)",
    "Departure(d)",
    "HeavySnow(wea)",
    "hasCarrier(d,DL)",
    "hasCarrier(d1,MU)",
    "hasCarrier(d2,AA)",
    "hasDelMin(d,Pos)",
    "hasDes(d,JFK)",
    "hasOri(d,LAX)",
    "hasRecDep(d,d1)",
    "hasRecDep(d,d2)",
    "hasWea(d,wea)",
    "locatedIn(LAX,CA)",
];

/// Added to the sample to trigger the hub role chain.
pub const DELAY_HUB: &str = "RoleAssert(hasCarHub DL ATL)";
/// What the hub assertion adds besides itself.
pub const DELAY_HUB_DERIVED: &str = "hasDepHub(d,ATL)";

/// Change-rate counts from the worked example: source and target closure
/// sizes, new, obsolete and invariant counts, and the stated denominator of
/// the invariant rate.
pub const CHANGE_EXAMPLE: (usize, usize, usize, usize, usize, usize) = (25180, 13412, 11419, 23187, 1193, 38592);
