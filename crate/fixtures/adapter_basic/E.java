public class E {
    public void specific() { }
}
