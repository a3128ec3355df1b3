use std::collections::BTreeMap;

use super::{Emission, Envelope, FrameError, InterfaceId, PartyLabel, Payload, System, World};

/// Behaviour covering a dishonest interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Filter {
    /// Sets the interface's control bit to 0 at start and swallows its outputs.
    Bot,
    /// Injects a fixed payload at start and swallows outputs.
    Inject(Payload),
    /// Sends every output straight back (honest pass-through).
    Echo,
    /// Swallows outputs.
    Absorb,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterSetting {
    entries: Vec<(InterfaceId, Filter)>,
}

impl FilterSetting {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, iface: InterfaceId, filter: Filter) -> Self {
        self.entries.push((iface, filter));
        self
    }

    pub fn entries(&self) -> &[(InterfaceId, Filter)] {
        &self.entries
    }
}

/// Result of [`compose`]: itself a [`System`].
pub struct Composed {
    name: String,
    parts: Vec<Box<dyn System>>,
    converter: Vec<bool>,
    inside: Vec<Vec<InterfaceId>>,
    resource_of: BTreeMap<InterfaceId, usize>,
    bound_to: BTreeMap<InterfaceId, usize>,
    outer: BTreeMap<InterfaceId, usize>,
    filters: Vec<(InterfaceId, usize, Filter)>,
}

/// Plugs each converter's inside ports into the resource interfaces of the
/// same name and covers the listed interfaces with filters. Resources are
/// composed in parallel (disjoint union of interfaces).
pub fn compose(
    resources: Vec<Box<dyn System>>,
    converters: Vec<Box<dyn System>>,
    filter: FilterSetting,
) -> Result<Composed, FrameError> {
    let mut resource_of = BTreeMap::new();
    for (p, r) in resources.iter().enumerate() {
        for iface in r.interfaces() {
            if resource_of.insert(iface.clone(), p).is_some() {
                return Err(FrameError::DuplicateInterface(iface));
            }
        }
    }
    let n_res = resources.len();
    let mut bound_to = BTreeMap::new();
    let mut inside = vec![Vec::new(); n_res];
    for (k, c) in converters.iter().enumerate() {
        let ports = c.inside_ports();
        for port in &ports {
            if !resource_of.contains_key(port) {
                return Err(FrameError::DanglingPort(port.clone()));
            }
            if bound_to.insert(port.clone(), n_res + k).is_some() {
                return Err(FrameError::DoubleBinding(port.clone()));
            }
        }
        inside.push(ports);
    }
    let mut outer = BTreeMap::new();
    for (iface, &p) in &resource_of {
        if !bound_to.contains_key(iface) {
            outer.insert(iface.clone(), p);
        }
    }
    for (k, c) in converters.iter().enumerate() {
        for iface in c.interfaces() {
            if outer.insert(iface.clone(), n_res + k).is_some() {
                return Err(FrameError::DuplicateInterface(iface));
            }
        }
    }
    let mut filters = Vec::new();
    for (iface, f) in filter.entries {
        let owner = outer.remove(&iface).ok_or_else(|| FrameError::DanglingPort(iface.clone()))?;
        filters.push((iface, owner, f));
    }
    let mut names: Vec<String> = resources.iter().chain(&converters).map(|s| s.name()).collect();
    if !filters.is_empty() {
        names.push("filters".into());
    }
    let converter = (0..n_res + converters.len()).map(|i| i >= n_res).collect();
    let mut parts = resources;
    parts.extend(converters);
    Ok(Composed {
        name: format!("({})", names.join("|")),
        parts,
        converter,
        inside,
        resource_of,
        bound_to,
        outer,
        filters,
    })
}

/// `a || b`.
pub fn parallel(a: Box<dyn System>, b: Box<dyn System>) -> Result<Composed, FrameError> {
    compose(vec![a, b], Vec::new(), FilterSetting::new())
}

impl Composed {
    fn filter_at(&self, port: &InterfaceId) -> Option<&Filter> {
        self.filters.iter().find(|(i, _, _)| i == port).map(|(_, _, f)| f)
    }

    fn endpoint_of(&self, part: usize, port: &InterfaceId) -> String {
        format!("{}:{}", self.parts[part].endpoint(port), port)
    }

    fn deliver(
        &mut self,
        world: &mut World<'_>,
        part: usize,
        port: &InterfaceId,
        payload: Payload,
        out: &mut Vec<Emission>,
    ) -> Result<(), FrameError> {
        let emitted = self.parts[part].receive(world, port, payload)?;
        for e in emitted {
            self.route(world, part, e, out)?;
        }
        Ok(())
    }

    fn route(
        &mut self,
        world: &mut World<'_>,
        from: usize,
        e: Emission,
        out: &mut Vec<Emission>,
    ) -> Result<(), FrameError> {
        let target = if self.converter[from] && self.inside[from].contains(&e.port) {
            Some(self.resource_of[&e.port])
        } else if !self.converter[from] {
            self.bound_to.get(&e.port).copied()
        } else {
            None
        };
        if let Some(to) = target {
            let (src, dst) = (self.endpoint_of(from, &e.port), self.endpoint_of(to, &e.port));
            world.record(&src, &dst, &e.port, &e.payload)?;
            return self.deliver(world, to, &e.port, e.payload, out);
        }
        if let Some(filter) = self.filter_at(&e.port).cloned() {
            let src = self.endpoint_of(from, &e.port);
            world.record(&src, &format!("filter:{}", e.port), &e.port, &e.payload)?;
            if filter == Filter::Echo {
                world.record(&format!("filter:{}", e.port), &src, &e.port, &e.payload)?;
                return self.deliver(world, from, &e.port, e.payload, out);
            }
            return Ok(());
        }
        out.push(e);
        Ok(())
    }
}

impl System for Composed {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        self.outer.keys().cloned().collect()
    }

    fn endpoint(&self, port: &InterfaceId) -> String {
        match self.outer.get(port).or_else(|| self.resource_of.get(port)) {
            Some(&p) => self.parts[p].endpoint(port),
            None => self.name.clone(),
        }
    }

    fn start(&mut self, world: &mut World<'_>) -> Result<Vec<Emission>, FrameError> {
        let mut out = Vec::new();
        for p in 0..self.parts.len() {
            for e in self.parts[p].start(world)? {
                self.route(world, p, e, &mut out)?;
            }
        }
        let injections: Vec<(InterfaceId, usize, Payload)> = self
            .filters
            .iter()
            .filter_map(|(iface, owner, f)| match f {
                Filter::Bot => Some((iface.clone(), *owner, Payload::Control(false))),
                Filter::Inject(p) => Some((iface.clone(), *owner, p.clone())),
                _ => None,
            })
            .collect();
        for (iface, owner, payload) in injections {
            let dst = self.endpoint_of(owner, &iface);
            world.record(&format!("filter:{iface}"), &dst, &iface, &payload)?;
            self.deliver(world, owner, &iface, payload, &mut out)?;
        }
        Ok(out)
    }

    fn receive(
        &mut self,
        world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        let part = *self.outer.get(port).ok_or_else(|| FrameError::DanglingPort(port.clone()))?;
        let mut out = Vec::new();
        self.deliver(world, part, port, payload, &mut out)?;
        Ok(out)
    }
}

/// Drives a system from the distinguisher's seat: starts it, feeds the
/// inputs in order and returns every external output. `respond` may answer
/// an output on the same interface (adversarial interfaces).
/// Answers an envelope that reaches an outside interface, or lets it leave.
pub(crate) type Respond<'r> =
    dyn FnMut(&mut World<'_>, &InterfaceId, &Payload) -> Result<Option<Payload>, FrameError> + 'r;

pub(crate) fn run_with(
    sys: &mut dyn System,
    world: &mut World<'_>,
    inputs: Vec<(InterfaceId, Payload)>,
    respond: &mut Respond<'_>,
) -> Result<Vec<Envelope>, FrameError> {
    let known = sys.interfaces();
    let mut outputs = Vec::new();
    let mut pending: Vec<Emission> = sys.start(world)?;
    let mut inputs = inputs.into_iter();
    loop {
        if pending.is_empty() {
            match inputs.next() {
                Some((iface, payload)) => {
                    if !known.contains(&iface) {
                        return Err(FrameError::DanglingPort(iface));
                    }
                    world.record("D", &format!("{}:{}", sys.endpoint(&iface), iface), &iface, &payload)?;
                    pending = sys.receive(world, &iface, payload)?;
                    continue;
                }
                None => break,
            }
        }
        let e = pending.remove(0);
        let dst = InterfaceId { label: PartyLabel::D, port: e.port.port.clone() };
        let step = world.record(&format!("{}:{}", sys.endpoint(&e.port), e.port), "D", &dst, &e.payload)?;
        if let Some(reply) = respond(world, &e.port, &e.payload)? {
            world.record("D", &format!("{}:{}", sys.endpoint(&e.port), e.port), &e.port, &reply)?;
            let more = sys.receive(world, &e.port, reply)?;
            pending.extend(more);
        }
        outputs.push(Envelope { step, src: e.port, dst, payload: e.payload });
    }
    Ok(outputs)
}

pub fn run_system(
    sys: &mut dyn System,
    world: &mut World<'_>,
    inputs: Vec<(InterfaceId, Payload)>,
) -> Result<Vec<Envelope>, FrameError> {
    run_with(sys, world, inputs, &mut |_, _, _| Ok(None))
}
