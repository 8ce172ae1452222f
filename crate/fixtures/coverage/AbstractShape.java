public abstract class AbstractShape implements Shape {
    protected int id;

    public void describe() { }
}
